#include "threadminer/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "text_util.hpp"
#include "threadminer/error.hpp"

namespace threadminer {

using nlohmann::json;

ForumCorpus::ForumCorpus(std::string name, std::vector<Thread> threads)
    : name_(std::move(name)), threads_(std::move(threads)) {
  index_.reserve(threads_.size());
  for (std::size_t i = 0; i < threads_.size(); ++i) {
    const Thread& t = threads_[i];
    if (t.posts.empty()) {
      throw Error(ErrorKind::kValidation,
                  "thread '" + t.thread_id + "' has no posts");
    }
    for (const Post& p : t.posts) {
      if (p.post_id.empty()) {
        throw Error(ErrorKind::kValidation,
                    "thread '" + t.thread_id + "' has a post with empty post_id");
      }
    }
    if (!index_.emplace(t.thread_id, i).second) {
      throw Error(ErrorKind::kValidation,
                  "duplicate thread_id '" + t.thread_id + "'");
    }
  }
}

const Thread* ForumCorpus::find(const std::string& thread_id) const {
  const auto it = index_.find(thread_id);
  return it == index_.end() ? nullptr : &threads_[it->second];
}

std::optional<std::size_t> ForumCorpus::position(
    const std::string& thread_id) const {
  const auto it = index_.find(thread_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

Thread thread_from_json(const json& j) {
  Thread t;
  t.thread_id = j.at("thread_id").get<std::string>();
  if (t.thread_id.empty()) throw std::invalid_argument("empty thread_id");
  t.title = j.at("title").get<std::string>();
  for (const json& jp : j.at("posts")) {
    Post p;
    p.post_id = jp.at("post_id").get<std::string>();
    p.author = jp.at("author").get<std::string>();
    if (const auto it = jp.find("timestamp"); it != jp.end() && !it->is_null()) {
      p.timestamp = it->get<std::string>();
    }
    p.body = jp.at("body").get<std::string>();
    t.posts.push_back(std::move(p));
  }
  if (t.posts.empty()) throw std::invalid_argument("posts list is empty");
  return t;
}

}  // namespace

ForumCorpus parse_corpus(std::istream& in, std::string name) {
  std::vector<Thread> threads;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    Thread t;
    try {
      t = thread_from_json(json::parse(line));
    } catch (const std::exception& e) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                         ": malformed thread record: " + e.what());
    }
    if (!seen.insert(t.thread_id).second) {
      throw Error(ErrorKind::kValidation, "line " + std::to_string(line_no) +
                                              ": duplicate thread_id '" +
                                              t.thread_id + "'");
    }
    threads.push_back(std::move(t));
  }
  return ForumCorpus(std::move(name), std::move(threads));
}

ForumCorpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open corpus '" + path + "'");
  return parse_corpus(in, path);
}

void write_corpus(std::ostream& out, const ForumCorpus& corpus) {
  for (const Thread& t : corpus.threads()) {
    json posts = json::array();
    for (const Post& p : t.posts) {
      posts.push_back({{"post_id", p.post_id},
                       {"author", p.author},
                       {"timestamp", p.timestamp ? json(*p.timestamp) : json()},
                       {"body", p.body}});
    }
    const json j = {{"thread_id", t.thread_id}, {"title", t.title}, {"posts", posts}};
    out << j.dump() << '\n';
  }
}

StatsReport corpus_stats(const ForumCorpus& corpus) {
  StatsReport r;
  std::set<std::string> authors;
  for (const Thread& t : corpus.threads()) {
    ++r.thread_count;
    r.post_count += t.posts.size();
    ++r.posts_per_thread[t.posts.size()];
    for (const Post& p : t.posts) authors.insert(p.author);
  }
  r.author_count = authors.size();
  if (r.thread_count == 0) return r;

  const double n = static_cast<double>(r.thread_count);
  // Walk the histogram from the largest bucket down, accumulating the tail.
  std::size_t tail = 0;
  std::vector<CcdfPoint> rev;
  for (auto it = r.posts_per_thread.rbegin(); it != r.posts_per_thread.rend(); ++it) {
    tail += it->second;
    rev.push_back({it->first, static_cast<double>(tail) / n});
  }
  r.ccdf.assign(rev.rbegin(), rev.rend());
  // Every thread has at least one post, so P[posts >= 1] is 1.
  if (r.ccdf.front().posts != 1) r.ccdf.insert(r.ccdf.begin(), {1, 1.0});

  const auto count = [&](std::size_t k) {
    const auto it = r.posts_per_thread.find(k);
    return it == r.posts_per_thread.end() ? std::size_t{0} : it->second;
  };
  r.frac_one_post = static_cast<double>(count(1)) / n;
  r.frac_le_two_posts = static_cast<double>(count(1) + count(2)) / n;
  return r;
}

std::optional<std::size_t> LabelSet::class_index(const std::string& name) const {
  const auto it = std::find(classes.begin(), classes.end(), name);
  if (it == classes.end()) return std::nullopt;
  return static_cast<std::size_t>(it - classes.begin());
}

namespace {

// Reads the header and returns data rows with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::vector<std::string>>> read_csv_rows(
    std::istream& in, const std::vector<std::string>& header) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv(line);
    for (auto& f : fields) f = std::string(detail::trim(f));
    if (!have_header) {
      if (fields != header) {
        std::string expected;
        for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
        throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                           ": expected CSV header '" + expected + "'");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": expected " +
                                         std::to_string(header.size()) + " fields");
    }
    rows.emplace_back(line_no, std::move(fields));
  }
  return rows;
}

void check_row(std::size_t line_no, const std::string& thread_id,
               const std::string& label, const ForumCorpus& corpus,
               const std::vector<std::string>& classes) {
  if (!corpus.find(thread_id)) {
    throw Error(ErrorKind::kValidation, "line " + std::to_string(line_no) +
                                            ": unknown thread_id '" + thread_id + "'");
  }
  if (std::find(classes.begin(), classes.end(), label) == classes.end()) {
    throw Error(ErrorKind::kValidation, "line " + std::to_string(line_no) +
                                            ": unknown class '" + label + "'");
  }
}

}  // namespace

LabelSet parse_labels(std::istream& in, const ForumCorpus& corpus,
                      const std::vector<std::string>& classes) {
  LabelSet set;
  set.classes = classes;
  for (auto& [line_no, f] : read_csv_rows(in, {"thread_id", "label"})) {
    check_row(line_no, f[0], f[1], corpus, classes);
    const auto [it, inserted] = set.labels.emplace(f[0], f[1]);
    if (!inserted && it->second != f[1]) {
      throw Error(ErrorKind::kValidation, "line " + std::to_string(line_no) +
                                              ": conflicting label for thread '" +
                                              f[0] + "'");
    }
  }
  return set;
}

LabelSet load_labels(const std::string& path, const ForumCorpus& corpus,
                     const std::vector<std::string>& classes) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open labels '" + path + "'");
  return parse_labels(in, corpus, classes);
}

void parse_annotations(std::istream& in, const ForumCorpus& corpus,
                       LabelSet& labels) {
  for (auto& [line_no, f] :
       read_csv_rows(in, {"thread_id", "annotator_id", "label"})) {
    check_row(line_no, f[0], f[2], corpus, labels.classes);
    const auto [it, inserted] = labels.annotations.emplace(std::pair{f[0], f[1]}, f[2]);
    if (!inserted && it->second != f[2]) {
      throw Error(ErrorKind::kValidation,
                  "line " + std::to_string(line_no) + ": annotator '" + f[1] +
                      "' gave conflicting labels for thread '" + f[0] + "'");
    }
  }
}

void load_annotations(const std::string& path, const ForumCorpus& corpus,
                      LabelSet& labels) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open annotations '" + path + "'");
  parse_annotations(in, corpus, labels);
}

}  // namespace threadminer
