#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace threadminer {

struct Post {
  std::string post_id;
  std::string author;
  std::optional<std::string> timestamp;  // stored verbatim, never parsed
  std::string body;
};

struct Thread {
  std::string thread_id;
  std::string title;
  std::vector<Post> posts;  // posts[0] is the first post
};

/// An immutable collection of threads with an id index.
class ForumCorpus {
 public:
  ForumCorpus() = default;
  /// Throws Error(kValidation) on a duplicate thread id, an empty post list
  /// or an empty post id.
  ForumCorpus(std::string name, std::vector<Thread> threads);

  const std::string& name() const { return name_; }
  const std::vector<Thread>& threads() const { return threads_; }
  std::size_t size() const { return threads_.size(); }
  bool empty() const { return threads_.empty(); }

  const Thread* find(const std::string& thread_id) const;
  std::optional<std::size_t> position(const std::string& thread_id) const;

 private:
  std::string name_;
  std::vector<Thread> threads_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Reads a JSONL dump, one thread object per line. Blank lines are skipped.
/// Malformed lines raise Error(kParse) naming the 1-based line number.
ForumCorpus load_corpus(const std::string& path);
ForumCorpus parse_corpus(std::istream& in, std::string name);

void write_corpus(std::ostream& out, const ForumCorpus& corpus);

struct CcdfPoint {
  std::size_t posts;   // k
  double fraction;     // P[posts per thread >= k]
};

struct StatsReport {
  std::size_t thread_count = 0;
  std::size_t post_count = 0;
  std::size_t author_count = 0;
  std::map<std::size_t, std::size_t> posts_per_thread;  // posts -> threads
  std::vector<CcdfPoint> ccdf;
  double frac_one_post = 0.0;
  double frac_le_two_posts = 0.0;
};

StatsReport corpus_stats(const ForumCorpus& corpus);

struct LabelSet {
  std::vector<std::string> classes;  // declared order
  std::map<std::string, std::string> labels;  // thread_id -> class
  // (thread_id, annotator_id) -> class
  std::map<std::pair<std::string, std::string>, std::string> annotations;

  std::size_t size() const { return labels.size(); }
  std::optional<std::size_t> class_index(const std::string& name) const;
};

/// Labels CSV with header `thread_id,label`. Unknown ids or classes and
/// conflicting duplicate rows raise Error(kValidation).
LabelSet load_labels(const std::string& path, const ForumCorpus& corpus,
                     const std::vector<std::string>& classes);
LabelSet parse_labels(std::istream& in, const ForumCorpus& corpus,
                      const std::vector<std::string>& classes);

/// Annotations CSV with header `thread_id,annotator_id,label`, merged into
/// `labels.annotations`.
void load_annotations(const std::string& path, const ForumCorpus& corpus,
                      LabelSet& labels);
void parse_annotations(std::istream& in, const ForumCorpus& corpus,
                       LabelSet& labels);

}  // namespace threadminer
