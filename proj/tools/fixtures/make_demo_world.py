#!/usr/bin/env python3
"""Synthetic scholarly graph for the Setswana/Nepali demo workspace.

Writes fixtures/demo/scholar_world.json (served by the test fixture server)
and copies the reference inputs into fixtures/demo/workspace/inputs.
"""
import hashlib
import json
import random
import shutil
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2]
OUT = ROOT / "fixtures" / "demo"

rng = random.Random(20250315)


def pid(*parts):
    return hashlib.sha1("|".join(parts).encode()).hexdigest()


LANGS = {
    "Setswana": {
        "code": "tsn",
        "datasets": ["Setswana NCHLT Corpus", "Tswana Treebank", "SADiLaR Setswana Speech"],
        "topics": ["named entity recognition", "part-of-speech tagging", "machine translation", "speech recognition"],
    },
    "Nepali": {
        "code": "npi",
        "datasets": ["Nepali Text Corpus", "EverestNER", "Nepali Sentiment Dataset", "NepBERTa Pretraining Data"],
        "topics": ["sentiment analysis", "text classification", "named entity recognition", "language modelling"],
    },
}

TOOLS = ["the Moses toolkit", "the BLEU metric", "multilingual BERT", "the spaCy library", "fastText embeddings"]


def paper(pid_, title, year, venue, abstract=None):
    p = {"paperId": pid_, "title": title, "year": year, "venue": venue}
    if abstract is not None:
        p["abstract"] = abstract
    return p


def main():
    papers = {}
    search = {}
    references = {}
    citations = {}

    for lang, spec in LANGS.items():
        code = spec["code"]
        dataset_papers = []
        for i, name in enumerate(spec["datasets"]):
            p = paper(pid(code, "dataset", name), f"{name}: construction and evaluation", 2012 + 2 * i + rng.randint(0, 2),
                      rng.choice(["LREC", "ACL", "EMNLP", "RAIL"]), f"We present the {name} for {lang}.")
            papers[p["paperId"]] = p
            dataset_papers.append((name, p))
        tool_papers = []
        for t in TOOLS[:3]:
            p = paper(pid(code, "tool", t), f"Reference paper for {t}", 2010 + rng.randint(0, 8), "ACL")
            papers[p["paperId"]] = p
            tool_papers.append((t, p))

        # Papers returned by the language query, in relevance order.
        hits = []
        n_hits = 7 if code == "tsn" else 9
        for i in range(n_hits):
            topic = spec["topics"][i % len(spec["topics"])]
            year = 2016 + rng.randint(0, 8)
            p = paper(pid(code, "hit", str(i)), f"{topic.capitalize()} for {lang}: study {i + 1}", year,
                      rng.choice(["LREC", "AfricaNLP", "ACL", "COLING", None]))
            if p["venue"] is None:
                del p["venue"]
            papers[p["paperId"]] = p
            hits.append(p["paperId"])

            refs = []
            for name, dp in rng.sample(dataset_papers, k=min(2, len(dataset_papers))):
                ctxs = [f"We train on the {name} [{rng.randint(1, 40)}], available at "
                        f"https://data.example.org/{code}/{name.lower().replace(' ', '-')}."]
                if rng.random() < 0.4:
                    ctxs.append(f"Statistics of the {name} corpus are given in Table {rng.randint(1, 5)}.")
                refs.append({"paperId": dp["paperId"], "contexts": ctxs})
            tname, tp = rng.choice(tool_papers)
            refs.append({"paperId": tp["paperId"], "contexts": [f"Models are evaluated with {tname} [{rng.randint(1, 40)}]."]})
            if i % 3 == 0:
                # Link without usable context text; discovery skips it.
                other = dataset_papers[0][1]
                refs.append({"paperId": other["paperId"], "contexts": []})
            if i == 1:
                # Self-citation is ignored.
                refs.append({"paperId": p["paperId"], "contexts": ["As shown in our earlier section."]})
            references[p["paperId"]] = refs

            cits = []
            for j in range(rng.randint(0, 3)):
                cp = paper(pid(code, "citer", str(i), str(j)), f"Follow-up work on {lang} {topic}", year + rng.randint(0, 2),
                           "ArXiv")
                papers[cp["paperId"]] = cp
                cits.append({"paperId": cp["paperId"],
                             "contexts": [f"The {lang} {topic} data released by [{rng.randint(1, 9)}] was reused here."]})
            citations[p["paperId"]] = cits
        search[lang] = hits

    # Dataset and tool papers are leaves.
    for pid_ in papers:
        references.setdefault(pid_, [])
        citations.setdefault(pid_, [])

    OUT.mkdir(parents=True, exist_ok=True)
    world = {"papers": papers, "search": search, "references": references, "citations": citations}
    (OUT / "scholar_world.json").write_text(json.dumps(world, indent=1, sort_keys=True) + "\n")

    inputs = OUT / "workspace" / "inputs"
    inputs.mkdir(parents=True, exist_ok=True)
    for name in ["languages.csv", "rules.tsv", "lre_map.csv", "ldc.csv"]:
        shutil.copyfile(ROOT / "fixtures" / "reference" / "inputs" / name, inputs / name)


if __name__ == "__main__":
    main()
