#include "rdiaudit/discovery.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <thread>

#include "rdiaudit/error.hpp"
#include "rdiaudit/util/log.hpp"
#include "rdiaudit/util/text.hpp"

namespace rdiaudit::discovery {

std::string build_query(std::string_view language_name, const std::vector<std::string>& terms) {
  auto name = text::trim(language_name);
  if (name.empty()) throw Error(ErrorCode::PreconditionViolation, "language name must be nonempty");
  if (terms.empty()) throw Error(ErrorCode::PreconditionViolation, "query terms must be nonempty");
  std::string q = "\"" + std::string(name) + "\" AND (";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) q += " OR ";
    q += "\"" + terms[i] + "\"";
  }
  return q + ")";
}

std::vector<CandidateMention> assemble_candidates(const lang::LanguageRegistry& registry, std::string_view language,
                                                  const std::vector<CitationContext>& contexts) {
  if (!registry.contains(language)) {
    throw Error(ErrorCode::PreconditionViolation, "language " + std::string(language) + " is not in the registry");
  }
  std::map<std::string, CandidateMention> by_id;
  for (const auto& ctx : contexts) {
    if (ctx.context_text.empty() || ctx.citing.paper_id == ctx.cited.paper_id) continue;
    auto id = make_mention_id(language, ctx.citing.paper_id, ctx.cited.paper_id, ctx.context_text);
    if (by_id.contains(id)) continue;
    CandidateMention m;
    m.mention_id = id;
    m.language = std::string(language);
    m.context = ctx;
    by_id.emplace(std::move(id), std::move(m));
  }
  std::vector<CandidateMention> out;
  out.reserve(by_id.size());
  for (auto& [_, m] : by_id) out.push_back(std::move(m));
  return out;
}

bool DiscoveryResult::ok() const {
  return std::none_of(runs.begin(), runs.end(), [](const LanguageRun& r) { return r.error.has_value(); });
}

void merge_paper(PaperRef& into, const PaperRef& from) {
  if (into.title.empty()) into.title = from.title;
  if (!into.year) into.year = from.year;
  if (!into.venue) into.venue = from.venue;
  if (!into.abstract) into.abstract = from.abstract;
}

DiscoveryResult run_discovery(ScholarClient& client, const lang::LanguageRegistry& registry,
                              const std::vector<std::string>& languages, const DiscoveryConfig& config) {
  if (config.k < 1) throw Error(ErrorCode::PreconditionViolation, "k must be at least 1");
  for (const auto& code : languages) {
    if (!registry.contains(code)) throw Error(ErrorCode::PreconditionViolation, "unknown language " + code);
  }

  struct Slot {
    LanguageRun run;
    std::vector<CandidateMention> candidates;
  };
  std::vector<Slot> slots(languages.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < languages.size(); i = next++) {
      auto& slot = slots[i];
      slot.run.language = languages[i];
      try {
        const auto* rec = registry.find(languages[i]);
        auto papers = client.search_papers(build_query(rec->canonical_name, config.query_terms), config.k);
        slot.run.papers = static_cast<long>(papers.size());
        std::vector<CitationContext> contexts;
        for (const auto& p : papers) {
          auto more = client.expand_citations(p);
          contexts.insert(contexts.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
        }
        slot.run.contexts = static_cast<long>(contexts.size());
        slot.candidates = assemble_candidates(registry, languages[i], contexts);
        slot.run.candidates = static_cast<long>(slot.candidates.size());
        log::info("discover " + languages[i] + ": " + std::to_string(slot.run.papers) + " papers, " +
                  std::to_string(slot.run.contexts) + " contexts, " + std::to_string(slot.run.candidates) +
                  " candidates");
      } catch (const Error& e) {
        slot.run.error = std::string(to_string(e.code())) + ": " + e.what();
        slot.candidates.clear();
        log::error("discover " + languages[i] + " failed: " + *slot.run.error);
      }
    }
  };

  int n_workers = std::clamp(config.workers, 1, std::max(1, static_cast<int>(languages.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  DiscoveryResult result;
  for (auto& slot : slots) {
    for (auto& m : slot.candidates) {
      for (const PaperRef* p : {&m.context.citing, &m.context.cited}) {
        auto [it, inserted] = result.papers.emplace(p->paper_id, *p);
        if (!inserted) merge_paper(it->second, *p);
      }
      result.candidates.push_back(std::move(m));
    }
    result.runs.push_back(std::move(slot.run));
  }
  std::sort(result.candidates.begin(), result.candidates.end(), [](const auto& a, const auto& b) {
    return std::tie(a.language, a.mention_id) < std::tie(b.language, b.mention_id);
  });
  return result;
}

std::string candidates_ndjson(const std::vector<CandidateMention>& candidates) {
  std::vector<const CandidateMention*> sorted;
  for (const auto& c : candidates) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return std::tie(a->language, a->mention_id) < std::tie(b->language, b->mention_id);
  });
  std::string out;
  for (const auto* c : sorted) out += candidate_to_record(*c).dump() + "\n";
  return out;
}

std::string papers_ndjson(const PaperIndex& papers) {
  std::string out;
  for (const auto& [_, p] : papers) out += paper_to_json(p).dump() + "\n";
  return out;
}

}  // namespace rdiaudit::discovery
