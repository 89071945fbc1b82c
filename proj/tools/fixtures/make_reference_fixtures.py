#!/usr/bin/env python3
"""Regenerates the shipped reference fixtures under fixtures/reference/.

The output is deterministic: running this script twice produces identical
files. Identifiers (mention ids, dataset ids) follow the same digest scheme as
the C++ library, so the C++ tests can recompute and cross-check them.

    python3 tools/fixtures/make_reference_fixtures.py [--out fixtures/reference]
"""

import argparse
import csv
import hashlib
import io
import json
import os
import random
from collections import Counter, defaultdict

# ---------------------------------------------------------------------------
# Language universe
# ---------------------------------------------------------------------------

# (code, name, population, mined, lre, ldc): the 53 languages of the
# comparison table.
TABLE_LANGUAGES = [
    ("tsn", "Setswana", 13.7, 26, 0, 0), ("tat", "Tatar", 4.8, 7, 0, 0),
    ("kir", "Kyrgyz", 6.1, 7, 0, 0), ("npi", "Nepali", 33.1, 30, 0, 0),
    ("bar", "Bavarian", 13.7, 12, 0, 0), ("pst", "Central Pashto", 7.3, 6, 0, 0),
    ("luo", "Dholuo", 5.3, 3, 0, 0), ("sdh", "Southern Kurdish", 6.0, 3, 0, 0),
    ("snd", "Sindhi", 36.9, 17, 0, 0), ("ory", "Odia", 39.5, 16, 0, 0),
    ("nso", "Northern Sotho", 13.7, 5, 0, 0), ("pbu", "Northern Pashto", 27.2, 8, 0, 0),
    ("tuk", "Turkmen", 7.8, 2, 0, 0), ("mya", "Burmese", 44.4, 9, 0, 0),
    ("dje", "Zarma", 5.3, 1, 0, 0), ("tir", "Tigrigna", 10.7, 2, 0, 0),
    ("syl", "Sylheti", 11.5, 2, 0, 0), ("hae", "Eastern Oromo", 12.1, 2, 0, 0),
    ("sot", "Southern Sotho", 13.5, 2, 0, 0), ("pcm", "Nigerian Pidgin", 120.7, 16, 0, 0),
    ("bho", "Bhojpuri", 52.7, 7, 0, 0), ("nod", "Northern Thai", 7.8, 1, 0, 0),
    ("xho", "Xhosa", 19.2, 2, 0, 0), ("mag", "Magahi", 21.0, 2, 0, 0),
    ("wes", "Cameroon Pidgin", 12.0, 1, 0, 0), ("pan", "Eastern Punjabi", 36.5, 3, 0, 0),
    ("sck", "Sadri", 12.1, 1, 0, 0), ("run", "Rundi", 12.9, 1, 0, 0),
    ("ctg", "Chittagonian", 13.0, 1, 0, 0), ("tts", "Northeastern Thai", 15.1, 1, 0, 0),
    ("nya", "Chichewa", 14.5, 1, 0, 0), ("mai", "Maithili", 17.6, 1, 0, 0),
    ("apd", "Sudanese Arabic", 52.3, 2, 0, 0), ("lin", "Lingala", 40.6, 1, 0, 0),
    ("pnb", "Western Punjabi", 90.3, 2, 0, 0),
    ("ckb", "Central Kurdish", 6.1, 17, 0, 1), ("asm", "Assamese", 23.6, 31, 0, 1),
    ("ind", "Indonesian", 252.4, 196, 31, 3), ("kin", "Kinyarwanda", 15.3, 12, 0, 1),
    ("khm", "Khmer", 19.0, 14, 0, 3), ("mar", "Marathi", 99.3, 41, 14, 0),
    ("aka", "Akan", 10.0, 4, 0, 1), ("uig", "Uyghur", 13.6, 5, 0, 1),
    ("guj", "Gujarati", 62.5, 17, 11, 0), ("som", "Somali", 24.7, 6, 0, 2),
    ("swh", "Swahili", 87.2, 19, 0, 4), ("yor", "Yoruba", 49.9, 10, 0, 2),
    ("hau", "Hausa", 94.4, 16, 12, 2), ("wol", "Wolof", 17.3, 3, 0, 1),
    ("jav", "Javanese", 69.2, 11, 0, 1), ("kmr", "Northern Kurdish", 17.2, 1, 0, 2),
    ("ceb", "Cebuano", 21.4, 1, 0, 3), ("nan", "Min Nan Chinese", 45.8, 2, 0, 7),
]

# (code, name, population, lre, ldc) -- average catalogue RDI above 1.0.
HIGH_LANGUAGES = [
    ("ell", "Greek", 13.1, 22, 8), ("ces", "Czech", 10.7, 18, 6),
    ("swe", "Swedish", 13.0, 21, 7), ("hun", "Hungarian", 12.6, 20, 6),
    ("heb", "Hebrew", 9.4, 12, 9), ("srp", "Serbian", 10.5, 17, 5),
    ("hrv", "Croatian", 5.5, 10, 3), ("bul", "Bulgarian", 7.8, 13, 4),
    ("dan", "Danish", 6.0, 11, 3), ("fin", "Finnish", 5.8, 12, 4),
    ("slk", "Slovak", 5.2, 9, 3), ("nob", "Norwegian Bokmål", 5.3, 9, 3),
    ("cat", "Catalan", 10.0, 18, 4), ("hye", "Armenian", 5.3, 7, 5),
    ("nld", "Dutch", 25.0, 40, 14), ("ron", "Romanian", 24.0, 38, 12),
    ("bel", "Belarusian", 5.1, 8, 3), ("afr", "Afrikaans", 18.0, 28, 10),
    ("ita", "Italian", 68.0, 110, 32), ("kaz", "Kazakh", 17.0, 25, 10),
    ("khk", "Halh Mongolian", 5.2, 7, 4),
]

# Average catalogue RDI in [0.1, 1.0]. Ilocano sits exactly on the 0.1 edge.
MID_LANGUAGES = [
    ("eng", "English", 1528.0, 420, 180), ("cmn", "Mandarin Chinese", 1184.0, 230, 160),
    ("hin", "Hindi", 609.0, 95, 40), ("spa", "Spanish", 558.0, 130, 60),
    ("fra", "French", 312.0, 120, 40), ("por", "Portuguese", 267.0, 70, 20),
    ("rus", "Russian", 253.0, 75, 35), ("deu", "German", 134.0, 110, 30),
    ("jpn", "Japanese", 126.0, 60, 35), ("arb", "Standard Arabic", 335.0, 55, 40),
    ("kor", "Korean", 81.0, 30, 20), ("vie", "Vietnamese", 97.0, 18, 8),
    ("tur", "Turkish", 90.0, 22, 8), ("pol", "Polish", 40.0, 25, 6),
    ("ukr", "Ukrainian", 39.0, 12, 4), ("tha", "Thai", 61.0, 14, 6),
    ("pes", "Iranian Persian", 79.0, 16, 8), ("ben", "Bangla", 284.0, 40, 20),
    ("urd", "Urdu", 246.0, 35, 20), ("tgl", "Tagalog", 87.0, 12, 8),
    ("tam", "Tamil", 86.0, 14, 6), ("tel", "Telugu", 96.0, 14, 7),
    ("mal", "Malayalam", 38.0, 7, 2), ("kan", "Kannada", 59.0, 9, 4),
    ("zsm", "Standard Malay", 33.0, 6, 3), ("amh", "Amharic", 60.0, 8, 6),
    ("zul", "Zulu", 28.0, 5, 2), ("uzn", "Northern Uzbek", 35.0, 6, 2),
    ("azj", "North Azerbaijani", 24.0, 5, 1), ("sin", "Sinhala", 17.0, 3, 1),
    ("hat", "Haitian Creole", 13.0, 1, 2), ("ilo", "Ilocano", 10.0, 1, 1),
    ("yue", "Yue Chinese", 86.0, 12, 8), ("apc", "Levantine Arabic", 37.0, 6, 3),
    ("arz", "Egyptian Arabic", 119.0, 18, 10), ("tgk", "Tajik", 10.0, 2, 1),
    ("lao", "Lao", 30.0, 3, 4), ("ibo", "Igbo", 31.0, 4, 3),
]

# Average catalogue RDI strictly between 0 and 0.1, outside the table.
LOW_LANGUAGES = [
    ("sun", "Sundanese", 42.0, 2, 1), ("wuu", "Wu Chinese", 83.0, 2, 0),
    ("bam", "Bambara", 14.0, 0, 1), ("sna", "Shona", 17.0, 1, 1),
    ("tso", "Tsonga", 12.0, 1, 0),
]

# No catalogue entries at all, outside the table.
ZERO_LANGUAGES = [
    ("arq", "Algerian Arabic", 37.0), ("ary", "Moroccan Arabic", 33.0),
    ("acm", "Mesopotamian Arabic", 33.0), ("aec", "Saidi Arabic", 25.0),
    ("ars", "Najdi Arabic", 15.0), ("acw", "Hijazi Arabic", 15.0),
    ("afb", "Gulf Arabic", 10.0), ("aeb", "Tunisian Arabic", 13.0),
    ("ayl", "Libyan Arabic", 6.0), ("ayp", "North Mesopotamian Arabic", 10.0),
    ("hak", "Hakka Chinese", 48.0), ("hsn", "Xiang Chinese", 37.0),
    ("gan", "Gan Chinese", 22.0), ("cjy", "Jinyu Chinese", 47.0),
    ("cdo", "Min Dong Chinese", 10.3), ("czh", "Huizhou Chinese", 4.6),
    ("awa", "Awadhi", 38.0), ("hne", "Chhattisgarhi", 16.0),
    ("bgc", "Haryanvi", 16.0), ("mup", "Malvi", 5.2),
    ("mwr", "Marwari", 7.8), ("bjj", "Kanauji", 9.5),
    ("skr", "Saraiki", 28.0), ("rkt", "Rangpuri", 15.0),
    ("kas", "Kashmiri", 7.0), ("sat", "Santali", 7.6),
    ("dcc", "Deccan", 13.0), ("hno", "Northern Hindko", 5.0),
    ("bhb", "Bhili", 4.7), ("fuv", "Nigerian Fulfulde", 18.0),
    ("gaz", "West Central Oromo", 25.0), ("ktu", "Kituba", 12.0),
    ("lua", "Luba-Kasai", 7.5), ("kng", "Koongo", 7.0),
    ("lug", "Ganda", 11.0), ("mos", "Mossi", 8.2),
    ("ewe", "Ewe", 7.6), ("tiv", "Tiv", 5.0),
    ("bci", "Baoulé", 5.5), ("kab", "Kabyle", 7.0),
    ("shi", "Tachelhit", 8.0), ("zgh", "Standard Moroccan Tamazight", 7.0),
    ("kri", "Krio", 8.0), ("umb", "Umbundu", 7.0),
    ("bem", "Bemba", 4.8), ("kik", "Gikuyu", 8.0),
    ("kln", "Kalenjin", 6.0), ("sag", "Sango", 5.0),
    ("plt", "Plateau Malagasy", 11.0), ("prs", "Dari", 20.0),
    ("azb", "South Azerbaijani", 13.0), ("mad", "Madurese", 7.7),
    ("min", "Minangkabau", 5.5), ("bjn", "Banjar", 4.8),
    ("bug", "Buginese", 5.0), ("bcl", "Central Bikol", 4.5),
    ("hil", "Hiligaynon", 9.1), ("sou", "Southern Thai", 4.5),
    ("shn", "Shan", 4.8), ("nap", "Neapolitan", 5.7),
    ("scn", "Sicilian", 4.7), ("gsw", "Swiss German", 5.0),
    ("aln", "Gheg Albanian", 4.0), ("vmw", "Makhuwa", 8.0),
    ("bfy", "Bagheli", 5.0), ("mtr", "Mewari", 5.0),
    ("ibb", "Ibibio", 4.5), ("knc", "Central Kanuri", 8.5),
    ("fub", "Adamawa Fulfulde", 5.0), ("suk", "Sukuma", 8.0),
    ("zyb", "Yongbei Zhuang", 4.5), ("pbt", "Southern Pashto", 8.0),
    ("kat", "Georgian", 3.9), ("gug", "Paraguayan Guaraní", 6.5),
    ("tpi", "Tok Pisin", 4.1), ("shu", "Chadian Arabic", 4.5),
    ("acq", "Ta'izzi-Adeni Arabic", 11.0), ("ayh", "Hadrami Arabic", 5.1),
    ("tzm", "Central Atlas Tamazight", 4.7), ("lmn", "Lambadi", 4.8),
    ("hoj", "Hadothi", 3.0), ("wbr", "Wagdi", 3.4),
    ("khn", "Khandesi", 2.5),
]

ALIASES = {
    "tsn": ["Tswana"], "arb": ["Modern Standard Arabic"], "ben": ["Bengali"],
    "swh": ["Kiswahili"], "ory": ["Oriya"], "npi": ["Nepali (individual language)"],
    "khk": ["Mongolian"], "nob": ["Norwegian"], "zsm": ["Malay"], "ell": [],
    "mya": ["Myanmar"], "nya": ["Nyanja"], "tir": ["Tigrinya"],
}

RULES = """# Label normalization rules for catalogue and literature language labels.
# Columns: source_label<TAB>action<TAB>target<TAB>note
# version: 2025.1
Modern Greek\tMAP_TO\tell\tmerged under Greek
Persian\tMAP_TO\tpes\tmerged under Iranian Persian
Brazilian Portuguese\tMAP_TO\tpor\tmerged into Portuguese
Uighur\tMAP_TO\tuig\tmerged into Uyghur
Chinese\tMAP_TO\tcmn\tmerged as Mandarin
Mandarin\tMAP_TO\tcmn\tmerged as Mandarin
North Levantine Arabic\tMAP_TO\tapc\tmerged into Levantine Arabic
South Levantine Arabic\tMAP_TO\tapc\tmerged into Levantine Arabic
Punjabi\tKEEP_BROAD\t\tumbrella label; Eastern and Western Punjabi not distinguished
Pashto\tKEEP_BROAD\t\tumbrella label; Central, Northern and Southern Pashto not distinguished
Kurdish\tKEEP_BROAD\t\tumbrella label; Central, Northern and Southern Kurdish not distinguished
Oromo\tKEEP_BROAD\t\tumbrella label; Eastern and West Central Oromo not distinguished
Arabic\tKEEP_BROAD\t\tmacrolanguage label without variety information
"""

# Alternative surface labels used when writing catalogue rows, to exercise
# case folding, aliases and rules.
LABEL_VARIANTS = {
    "ell": ["Greek", "Modern Greek", "greek"],
    "pes": ["Persian", "Iranian Persian"],
    "por": ["Portuguese", "Brazilian Portuguese"],
    "uig": ["Uighur"],
    "cmn": ["Chinese", "Mandarin", "Mandarin Chinese"],
    "apc": ["Levantine Arabic", "North Levantine Arabic", "South Levantine Arabic"],
    "fra": ["French", "french"],
    "ita": ["Italian", "italian"],
    "arb": ["Standard Arabic", "Modern Standard Arabic"],
    "ben": ["Bangla", "Bengali"],
    "ind": ["Indonesian", "indonesian"],
}

RESOURCE_TYPES = ["Corpus", "Lexicon", "Treebank", "Speech corpus", "Evaluation data", "Tool"]


def sha256_hex(s):
    return hashlib.sha256(s.encode("utf-8")).hexdigest()


def short_digest(fields, n=16):
    return sha256_hex("\x1f".join(fields))[:n]


def context_digest(text):
    return sha256_hex(text)[:16]


def mention_id(lang, citing, cited, context):
    return short_digest([lang, citing, cited, context_digest(context)])


def dataset_id(name, lang, founder):
    return short_digest([name, lang, founder])


def paper_id(*parts):
    return hashlib.sha1("|".join(str(p) for p in parts).encode()).hexdigest()


def dumps(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def all_languages():
    langs = []
    for code, name, pop, _m, _l, _d in TABLE_LANGUAGES:
        langs.append((code, name, pop))
    for code, name, pop, _l, _d in HIGH_LANGUAGES + MID_LANGUAGES + LOW_LANGUAGES:
        langs.append((code, name, pop))
    langs.extend(ZERO_LANGUAGES)
    assert len(langs) == 200, len(langs)
    assert len({c for c, _n, _p in langs}) == 200
    return langs


def catalogue_targets():
    targets = {}
    for code, _n, _p, _m, lre, ldc in TABLE_LANGUAGES:
        targets[code] = [lre, ldc]
    for code, _n, _p, lre, ldc in HIGH_LANGUAGES + MID_LANGUAGES + LOW_LANGUAGES:
        targets[code] = [lre, ldc]
    for code, _n, _p in ZERO_LANGUAGES:
        targets[code] = [0, 0]
    return targets


def fmt_pop(p):
    s = ("%.1f" % p)
    return s


def write_text(path, content):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(content)


def csv_text(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Catalogues
# ---------------------------------------------------------------------------


def build_catalogues(rng, names):
    targets = catalogue_targets()
    remaining = {c: list(v) for c, v in targets.items()}
    lre_rows, ldc_rows = [], []

    def label_for(code, k):
        variants = LABEL_VARIANTS.get(code)
        if variants:
            return variants[k % len(variants)]
        name = names[code]
        return name.lower() if k % 7 == 3 else name

    lre_seq = [0]
    ldc_seq = defaultdict(int)

    def lre_id():
        lre_seq[0] += 1
        return "lre-%06d" % lre_seq[0]

    def ldc_id(year):
        ldc_seq[year] += 1
        n = ldc_seq[year]
        letter = "STVL"[n % 4]
        return "LDC%d%s%02d" % (year, letter, n)

    def add_lre(labels, codes, name=None):
        for c in codes:
            remaining[c][0] -= 1
            assert remaining[c][0] >= 0, c
        year = rng.randint(1998, 2024)
        lre_rows.append([lre_id(), name or "Resource %d" % (len(lre_rows) + 1),
                         rng.choice(RESOURCE_TYPES), ";".join(labels), str(year)])

    def add_ldc(labels, codes, name=None):
        for c in codes:
            remaining[c][1] -= 1
            assert remaining[c][1] >= 0, c
        year = rng.randint(1994, 2024)
        ldc_rows.append([ldc_id(year), name or "Catalog Release %d" % (len(ldc_rows) + 1),
                         ";".join(labels), str(year), rng.choice(RESOURCE_TYPES)])

    # Multi-label and exception showcases.
    add_ldc(["Khmer", "English"], ["khm", "eng"], "Khmer-English Parallel Text")
    add_lre(["italian", "Italian"], ["ita"], "Italian Web Corpus (duplicate label)")
    add_lre(["Indonesian", "English"], ["ind", "eng"], "Indonesian-English News Bitext")
    add_lre(["French", "German", "Spanish"], ["fra", "deu", "spa"], "Europarl Subset")
    add_ldc(["Mandarin Chinese", "Chinese"], ["cmn"], "Mandarin Broadcast News")
    add_lre(["Punjabi", "English"], ["eng"], "Punjabi-English Lexicon")
    add_lre(["Arabic", "French"], ["fra"], "Maghreb Code-Switching Corpus")
    for label in ["Punjabi", "Pashto", "Kurdish", "Oromo", "Klingonish", "Sign Language", "Multilingual"]:
        add_lre([label], [], "%s resource" % label)
    add_ldc(["Pashto"], [], "Pashto Conversational Telephone Speech")
    add_ldc(["Punjabi"], [], "Punjabi Newswire")

    for code in sorted(remaining):
        lre, ldc = remaining[code]
        for k in range(lre):
            add_lre([label_for(code, k)], [code])
        for k in range(ldc):
            add_ldc([label_for(code, k + 1)], [code])

    assert all(v == [0, 0] for v in remaining.values())
    rng.shuffle(lre_rows)
    rng.shuffle(ldc_rows)
    lre = [["resource_id", "resource_name", "resource_type", "languages", "year"]] + lre_rows
    ldc = [["catalog_id", "title", "language", "release_year", "type"]] + ldc_rows
    return lre, ldc, targets


# ---------------------------------------------------------------------------
# Validation workspace: candidates, papers, decision ledger, probes
# ---------------------------------------------------------------------------

TASKS_TEXT = ["Sentiment Analysis", "Machine Translation", "Parsing and Tagging",
              "Named Entity Recognition", "Text Classification", "Question Answering",
              "Language Modeling", "Hate Speech Detection"]
TASKS_SPEECH = ["Speech Recognition", "Spoken Language Understanding"]
SPEECH_HEAVY = {"hau", "asm", "guj", "ckb"}
KINDS = {"Sentiment Analysis": "Sentiment Corpus", "Machine Translation": "Parallel Corpus",
         "Parsing and Tagging": "Treebank", "Named Entity Recognition": "NER Dataset",
         "Text Classification": "News Classification Dataset", "Question Answering": "QA Dataset",
         "Language Modeling": "Web Corpus", "Hate Speech Detection": "Hate Speech Dataset",
         "Speech Recognition": "Speech Corpus", "Spoken Language Understanding": "Spoken Intent Dataset"}

EMERGENCE_WEIGHTS = {2008: 1, 2009: 1, 2010: 2, 2011: 2, 2012: 3, 2013: 3, 2014: 4, 2015: 5, 2016: 6,
                     2017: 8, 2018: 10, 2019: 12, 2020: 15, 2021: 13, 2022: 11, 2023: 9, 2024: 6}


def iso_ts(base_day, seconds):
    minutes, sec = divmod(seconds, 60)
    hours, minute = divmod(minutes, 60)
    day = base_day + hours // 10
    hour = 9 + hours % 10
    month = 3 + (day - 1) // 28
    dom = 1 + (day - 1) % 28
    return "2025-%02d-%02dT%02d:%02d:%02dZ" % (month, dom, hour, minute, sec)


def build_workspace(rng, names, low_visibility):
    papers = {}
    candidates = []
    events = []

    def add_paper(pid, title, year, venue=None, abstract=None):
        rec = {"paper_id": pid, "title": title, "year": year}
        if venue:
            rec["venue"] = venue
        if abstract:
            rec["abstract"] = abstract
        papers[pid] = rec
        return pid

    years = list(EMERGENCE_WEIGHTS)
    weights = [EMERGENCE_WEIGHTS[y] for y in years]
    venues = ["LREC", "ACL", "EMNLP", "NAACL", "COLING", "Interspeech", "AfricaNLP", "WANLP", "SIGUL"]

    datasets = []  # dicts with founder info
    table = {c: m for c, _n, _p, m, _l, _d in TABLE_LANGUAGES}
    for code in sorted(table):
        lang = names[code]
        for i in range(table[code]):
            speech = code in SPEECH_HEAVY and i % 3 == 0 or (i % 11 == 7)
            task = rng.choice(TASKS_SPEECH) if speech else rng.choice(TASKS_TEXT)
            modality = "SPEECH" if speech else ("MULTIMODAL" if i % 29 == 13 else "TEXT")
            name = "%s %s %d" % (lang, KINDS[task], i + 1)
            emergence = rng.choices(years, weights)[0]
            src = add_paper(paper_id("src", code, i), "%s: a new resource for %s" % (name, lang), emergence,
                            rng.choice(venues))
            slug = name.lower().replace(" ", "-")
            url = "https://data.example.org/%s/%s" % (code, slug)
            lag = rng.choices([0, 1, 2, 3, 4], [2, 5, 4, 2, 1])[0]
            use = add_paper(paper_id("use", code, i, 0), "Experiments on %s %s" % (lang, task.lower()),
                            min(emergence + lag, 2025), rng.choice(venues))
            if i % 2 == 0:
                ctx = "We evaluate on the %s released by its authors, available at %s." % (name, url)
            else:
                ctx = "Our training data is the %s, a corpus of annotated %s text (%s)." % (name, lang, url)
            direction = "OUTGOING" if i % 2 == 0 else "INCOMING"
            mid = mention_id(code, use, src, ctx)
            candidates.append({"mention_id": mid, "language": code, "citing": use, "cited": src,
                               "context": ctx, "direction": direction})
            datasets.append({"code": code, "index": i, "name": name, "founder": mid, "src": src,
                             "task": task, "modality": modality, "url": url,
                             "id": dataset_id(name, code, mid)})

    # Merges: round-robin over languages with several datasets, largest first.
    by_lang = defaultdict(list)
    for d in datasets:
        by_lang[d["code"]].append(d)
    order = sorted((c for c in by_lang if len(by_lang[c]) >= 2), key=lambda c: (-len(by_lang[c]), c))
    merge_targets = []
    cursor = defaultdict(int)
    while len(merge_targets) < 58:
        for c in order:
            if len(merge_targets) == 58:
                break
            k = cursor[c]
            if k < len(by_lang[c]):
                merge_targets.append(by_lang[c][k])
                cursor[c] += 1

    merges = []
    for n, d in enumerate(merge_targets):
        code = d["code"]
        acronym = "".join(w[0] for w in d["name"].split() if w[0].isalpha()).upper() + str(d["index"] + 1)
        use = add_paper(paper_id("use", code, d["index"], 1), "Revisiting %s benchmarks" % names[code],
                        min(papers[d["src"]]["year"] + 1 + n % 3, 2025), rng.choice(venues))
        # 0..42 share evidence; 43..52 cite a second plausible source paper;
        # 53..57 cite a second paper that the annotator rules out.
        cited = d["src"]
        if n >= 43:
            alt_year = papers[d["src"]]["year"] + (1 if n % 2 else -1)
            cited = add_paper(paper_id("alt", code, d["index"]), "%s v2: extended release" % d["name"], alt_year,
                              rng.choice(venues))
            d["alt"] = cited
            d["alt_kind"] = "ambiguous" if n < 53 else "narrowed"
        ctx = "Results on %s (the %s) are reported in Table 3." % (acronym, d["name"])
        mid = mention_id(code, use, cited, ctx)
        candidates.append({"mention_id": mid, "language": code, "citing": use, "cited": cited,
                           "context": ctx, "direction": "OUTGOING"})
        merges.append((mid, d))

    # Rejections spread over all low-visibility languages.
    rejected = []
    low = sorted(low_visibility)
    for n in range(145):
        code = low[n % len(low)]
        lang = names[code]
        unconfirmable = n < 101
        citing = add_paper(paper_id("rej-citing", n), "A study of %s language technology %d" % (lang, n),
                           rng.randint(2012, 2025), rng.choice(venues))
        if unconfirmable:
            cited = add_paper(paper_id("rej-cited", n), "Proceedings companion volume %d" % n,
                              rng.randint(2005, 2024))
            ctx = "Similar observations for %s have been made before [%d]." % (lang, n % 40 + 1)
        else:
            kind = ["toolkit", "dictionary", "book", "software library"][n % 4]
            cited = add_paper(paper_id("rej-cited", n), "An open %s for %s" % (kind, lang),
                              rng.randint(2005, 2024))
            ctx = "We preprocess the %s text using the %s of [%d]." % (lang, kind, n % 40 + 1)
        mid = mention_id(code, citing, cited, ctx)
        candidates.append({"mention_id": mid, "language": code, "citing": citing, "cited": cited,
                           "context": ctx, "direction": "OUTGOING" if n % 3 else "INCOMING"})
        rejected.append((mid, "UNCONFIRMABLE" if unconfirmable else "NON_DATASET"))

    assert len(candidates) == 812
    assert len({c["mention_id"] for c in candidates}) == 812

    # Decision ledger.
    seq = [0]

    def emit(kind, **fields):
        seq[0] += 1
        ev = {"seq": seq[0], "ts": iso_ts(1, seq[0] * 37), "annotator": "ann-%02d" % (1 + seq[0] % 3),
              "kind": kind}
        ev.update({k: v for k, v in fields.items() if v is not None})
        events.append(ev)

    for d in datasets:
        emit("state", mention=d["founder"], state="CONFIRMED", canonical_name=d["name"])
    # A few early mistakes later corrected by compensating decisions.
    corrected = [mid for mid, st in rejected if st == "UNCONFIRMABLE"][:5]
    for mid in corrected:
        emit("state", mention=mid, state="CONFIRMED", canonical_name="Unverified resource " + mid[:6])
    for mid, st in rejected:
        emit("state", mention=mid, state=st, note="context lacks dataset evidence" if st == "UNCONFIRMABLE"
             else "cited item is not a dataset")
    for mid, d in merges:
        emit("state", mention=mid, state="MERGED", target=d["id"], note="same resource as " + d["name"])

    # Task and modality labels (a dozen datasets stay unlabeled).
    unlabeled = set(d["id"] for d in datasets[5::50][:12])
    for d in datasets:
        if d["id"] in unlabeled:
            continue
        emit("labels", dataset=d["id"], tasks=[d["task"]], modality=d["modality"])

    # Temporal attribution reviews.
    merged_ids = {d["id"] for _m, d in merges}
    plain = [d for d in datasets if d["id"] not in merged_ids]
    rng.shuffle(plain)
    ambiguous_review = plain[:28]
    no_paper = plain[28:50]
    for d in ambiguous_review:
        alt = add_paper(paper_id("alt-review", d["code"], d["index"]), "Companion report on %s" % d["name"],
                        papers[d["src"]]["year"] + 1, "arXiv")
        emit("emergence", dataset=d["id"], plausible=[d["src"], alt], note="two candidate source papers")
    for d in no_paper:
        emit("emergence", dataset=d["id"], plausible=[], note="evidence is a project page only")
    for _mid, d in merges:
        if d.get("alt_kind") == "narrowed":
            emit("emergence", dataset=d["id"], plausible=[d["src"]], note="second citation is a reuse paper")

    # Accessibility evidence.
    probes = []
    rest = list(datasets)
    rng.shuffle(rest)
    groups = [("file", 300), ("page_confirmed", 56), ("dead", 140), ("timeout", 25), ("tls", 8),
              ("gated", 45), ("page_unconfirmed", 35)]
    assert sum(n for _g, n in groups) == 609
    pos = 0
    t = [0]

    def probe(d, outcome, status=None, kind=None, final=None):
        t[0] += 1
        rec = {"dataset": d["id"], "url": d["url"], "final_url": final or d["url"], "outcome": outcome,
               "content_kind": kind or "UNKNOWN", "probed_at": iso_ts(90, t[0] * 11)}
        if status is not None:
            rec["http_status"] = status
        probes.append(rec)

    for group, n in groups:
        for d in rest[pos:pos + n]:
            if group == "file":
                if d["index"] % 15 == 4:
                    probe(d, "DEAD", 503)  # transient failure, re-probed later
                probe(d, "RESOLVED", 200, "FILE", d["url"] + ".zip" if d["index"] % 3 == 0 else None)
            elif group == "page_confirmed":
                probe(d, "RESOLVED", 200, "PAGE")
                emit("accessibility", dataset=d["id"], status="OPEN", confirmation=True,
                     note="registration-free download form on the project page")
            elif group == "dead":
                if d["index"] % 4 == 0:
                    probe(d, "DEAD")
                else:
                    probe(d, "DEAD", 404 if d["index"] % 4 != 3 else 410)
            elif group == "timeout":
                probe(d, "TIMEOUT")
            elif group == "tls":
                probe(d, "TLS_FAILURE")
            elif group == "gated":
                probe(d, "RESOLVED", 200, "GATED", "https://login.example.org/sso?next=" + d["code"])
                emit("accessibility", dataset=d["id"], status="NOT_OPEN", confirmation=False,
                     note="access requires an institutional licence")
            else:
                probe(d, "RESOLVED", 200, "PAGE")
        pos += n

    return papers, candidates, events, probes, datasets


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "..", "fixtures", "reference"))
    args = ap.parse_args()
    out = os.path.abspath(args.out)
    rng = random.Random(20250301)

    langs = all_languages()
    names = {c: n for c, n, _p in langs}

    # inputs/
    lang_rows = [["iso639_3", "name", "population_millions", "aliases"]]
    for code, name, pop in langs:
        lang_rows.append([code, name, fmt_pop(pop), ";".join(ALIASES.get(code, []))])
    write_text(os.path.join(out, "inputs", "languages.csv"), csv_text(lang_rows))
    write_text(os.path.join(out, "inputs", "rules.tsv"), RULES)

    lre, ldc, targets = build_catalogues(rng, names)
    write_text(os.path.join(out, "inputs", "lre_map.csv"), csv_text(lre))
    write_text(os.path.join(out, "inputs", "ldc.csv"), csv_text(ldc))
    exp = [["iso639_3", "source", "count"]]
    for code in sorted(targets):
        exp.append([code, "LRE_MAP", str(targets[code][0])])
        exp.append([code, "LDC", str(targets[code][1])])
    write_text(os.path.join(out, "expected_counts.csv"), csv_text(exp))

    pops = {c: p for c, _n, p in langs}
    avg = {c: (targets[c][0] / pops[c] + targets[c][1] / pops[c]) / 2 for c in targets}
    low_visibility = [c for c in targets if avg[c] < 0.1]
    assert sum(1 for v in avg.values() if v == 0.0) == 118
    assert sum(1 for v in avg.values() if 0.0 < v < 0.1) == 23
    assert len(low_visibility) == 141
    assert sum(1 for v in avg.values() if v > 1.0) == 21

    papers, candidates, events, probes, _datasets = build_workspace(rng, names, low_visibility)
    write_text(os.path.join(out, "cache", "papers.jsonl"),
               "".join(dumps(papers[k]) + "\n" for k in sorted(papers)))
    cands = sorted(candidates, key=lambda c: (c["language"], c["mention_id"]))
    write_text(os.path.join(out, "cache", "candidates.jsonl"), "".join(dumps(c) + "\n" for c in cands))
    write_text(os.path.join(out, "ledger", "decisions.log"), "".join(dumps(e) + "\n" for e in events))
    write_text(os.path.join(out, "ledger", "probes.jsonl"), "".join(dumps(p) + "\n" for p in probes))

    states = Counter(e["state"] for e in events if e["kind"] == "state")
    print("languages", len(langs), "candidates", len(candidates), "events", len(events), "probes", len(probes))
    print("state events", dict(states))


if __name__ == "__main__":
    main()
