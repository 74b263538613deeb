#include "threadminer/identify.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "text_util.hpp"
#include "threadminer/error.hpp"

namespace threadminer {

KeywordSet make_keyword_set(std::string name, std::set<std::string> words,
                            std::size_t threshold) {
  if (words.empty()) {
    throw Error(ErrorKind::kValidation, "keyword set '" + name + "' is empty");
  }
  if (threshold < 1) {
    throw Error(ErrorKind::kValidation, "keyword set '" + name + "' needs threshold >= 1");
  }
  return {std::move(name), std::move(words), threshold};
}

KeywordSet load_keyword_set(const std::string& path, std::string name,
                            std::size_t threshold) {
  std::set<std::string> words;
  for (std::string w : detail::read_word_list(path)) {
    for (char& ch : w) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    words.insert(std::move(w));
  }
  return make_keyword_set(std::move(name), std::move(words), threshold);
}

std::vector<std::string> unmatchable_keywords(const KeywordSet& set,
                                              const StopwordSet& stopwords) {
  std::vector<std::string> bad;
  for (const std::string& w : set.words) {
    // A keyword survives when it comes back out of preprocessing unchanged,
    // either as the single unigram or as the single bigram.
    const auto toks = preprocess_document(w, stopwords);
    const bool ok = (toks.size() == 1 && toks[0] == w) ||
                    (toks.size() == 3 && toks[2] == w);
    if (!ok) bad.push_back(w);
  }
  return bad;
}

std::size_t keyword_hits(const TokenizedDoc& doc, const KeywordSet& set) {
  return static_cast<std::size_t>(std::count_if(
      doc.tokens.begin(), doc.tokens.end(),
      [&](const std::string& tok) { return set.words.contains(tok); }));
}

std::set<std::string> keyword_select(std::span<const TokenizedDoc> docs,
                                     std::span<const KeywordSet> sets) {
  if (sets.empty()) throw Error(ErrorKind::kValidation, "keyword_select needs at least one set");
  std::set<std::string> selected;
  for (const TokenizedDoc& doc : docs) {
    const bool all = std::all_of(sets.begin(), sets.end(), [&](const KeywordSet& s) {
      return keyword_hits(doc, s) >= s.threshold;
    });
    if (all) selected.insert(doc.thread_id);
  }
  return selected;
}

std::optional<Provenance> SelectionResult::provenance(const std::string& thread_id) const {
  if (seeds.contains(thread_id)) return Provenance::kKeyword;
  if (expanded.contains(thread_id)) return Provenance::kSimilarity;
  return std::nullopt;
}

double SelectionResult::selected_fraction() const {
  return total_threads == 0 ? 0.0
                            : static_cast<double>(selected()) / static_cast<double>(total_threads);
}

std::map<std::string, ExpansionHit> similarity_expand(const ThreadVectors& seeds,
                                                      const ThreadVectors& candidates,
                                                      double t_sim) {
  if (!(t_sim > 0.0 && t_sim <= 1.0)) {
    throw Error(ErrorKind::kValidation, "t_sim must be in (0, 1]");
  }
  if (seeds.empty()) throw Error(ErrorKind::kValidation, "similarity_expand needs at least one seed");
  for (const auto& [id, _] : candidates) {
    if (seeds.contains(id)) {
      throw Error(ErrorKind::kValidation, "thread '" + id + "' is both seed and candidate");
    }
  }

  // Norms are computed once; the per-pair arithmetic is the same as
  // cosine_similarity so scores agree bit for bit. Zero-norm vectors never
  // match anything.
  const auto norm = [](const ThreadVector& tv) {
    double n = 0.0;
    for (double x : tv.full) n += x * x;
    return std::sqrt(n);
  };
  struct Anchor {
    const std::string* id;
    const std::vector<double>* v;
    double norm;
  };
  std::vector<Anchor> anchors;
  anchors.reserve(seeds.size());
  for (const auto& [id, tv] : seeds) {
    if (const double n = norm(tv); n > 0) anchors.push_back({&id, &tv.full, n});
  }

  std::map<std::string, ExpansionHit> hits;
  for (const auto& [id, tv] : candidates) {
    const double cn = norm(tv);
    if (cn == 0.0) continue;
    const std::vector<double>& c = tv.full;
    double best = -2.0;
    const std::string* best_id = nullptr;
    for (const Anchor& a : anchors) {
      if (a.v->size() != c.size()) {
        throw Error(ErrorKind::kValidation, "thread vectors differ in dimension");
      }
      double dot = 0.0;
      for (std::size_t k = 0; k < c.size(); ++k) dot += c[k] * (*a.v)[k];
      const double s = std::clamp(dot / (cn * a.norm), -1.0, 1.0);
      if (s > best) {
        best = s;
        best_id = a.id;
      }
    }
    if (best_id && best >= t_sim) hits.emplace(id, ExpansionHit{best, *best_id});
  }
  return hits;
}

SelectionResult identify_threads(std::span<const TokenizedDoc> docs,
                                 const EmbeddingMatrix& emb,
                                 std::span<const KeywordSet> sets, double t_sim,
                                 ThreadVectors* projections) {
  SelectionResult result;
  result.total_threads = docs.size();
  result.seeds = keyword_select(docs, sets);

  ThreadVectors seed_vecs, candidate_vecs;
  for (const TokenizedDoc& doc : docs) {
    try {
      ThreadVector tv = project_thread(doc, emb);
      if (projections) projections->emplace(doc.thread_id, tv);
      (result.seeds.contains(doc.thread_id) ? seed_vecs : candidate_vecs)
          .emplace(doc.thread_id, std::move(tv));
    } catch (const UnprojectableThread&) {
      result.unprojectable.push_back(doc.thread_id);
    }
  }
  std::sort(result.unprojectable.begin(), result.unprojectable.end());

  if (!seed_vecs.empty()) {
    result.scores = similarity_expand(seed_vecs, candidate_vecs, t_sim);
    for (const auto& [id, _] : result.scores) result.expanded.insert(id);
  }
  return result;
}

}  // namespace threadminer
