// Writes the bundled demo forum: corpus.jsonl, labels.csv, annotations.csv.
//
//   make_synthetic --out data/synthetic [--threads 600] [--seed 7]
//
// Threads are assembled from per-topic word pools. About 60% are about
// security (four classes), the rest are off-topic chatter. Post counts per
// thread are heavily skewed, as in real forums.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "threadminer/corpus.hpp"

namespace {

using Pool = std::vector<std::string>;

const std::vector<std::string> kClasses = {"Hacks", "Services", "Alerts", "Experiences"};

const std::vector<Pool> kClassPools = {
    {"tutorial", "guide", "steps", "exploit", "injection", "payload", "script", "shell",
     "command", "sql", "xss", "bypass", "crack", "router", "wifi", "method", "compile",
     "terminal", "kali", "metasploit"},
    {"tool", "price", "pay", "hire", "service", "sell", "buy", "cheap", "offer", "paypal",
     "bitcoin", "deal", "vendor", "botnet", "rent", "contact", "negotiable", "fee", "order",
     "discount"},
    {"announced", "reported", "hacked", "breach", "vulnerability", "attack", "ransomware",
     "leaked", "patch", "malware", "worm", "victims", "company", "warning", "disclosed",
     "outage", "compromised", "agency", "records", "cve"},
    {"article", "story", "challenge", "experience", "learned", "mistake", "review", "opinion",
     "lesson", "career", "years", "read", "journey", "thoughts", "advice", "certification",
     "interview", "course", "wrote", "blog"},
};

const Pool kSecurityCommon = {"hack", "hacking", "hacker", "help", "need", "how", "anyone",
                              "please", "know", "question", "worried", "security", "account",
                              "email", "facebook", "password", "system", "website", "server",
                              "network", "user", "data", "access", "problem"};

const Pool kOffTopic = {"game", "music", "movie", "football", "team", "song", "album",
                        "recipe", "cooking", "pizza", "weekend", "match", "player", "level",
                        "console", "guitar", "concert", "season", "coffee", "holiday",
                        "weather", "garden", "anime", "series", "book", "painting"};

const Pool kChatter = {"really", "love", "think", "today", "best", "favourite", "watch",
                        "played", "listen", "friends", "fun", "night", "new", "old", "time",
                        "good", "bad", "awesome", "tonight", "tomorrow"};

const Pool kGlue = {"the", "a", "i", "is", "and", "to", "of", "it", "this", "for", "my",
                    "in", "on", "with", "you", "that", "be", "was"};

const Pool kReplies = {"thanks for sharing", "great post", "nice tut works great for me",
                       "thank you", "good job mate", "interesting read", "same here",
                       "bump", "very useful thanks", "i agree"};

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  bool chance(double p) { return static_cast<double>(rng_() >> 11) * 0x1.0p-53 < p; }
  const std::string& pick(const Pool& p) { return p[below(p.size())]; }

  // `topical` is the share of content words drawn from `pool`.
  std::string sentence(const Pool& pool, double topical, std::size_t words,
                       const Pool& filler = kSecurityCommon) {
    std::string s;
    for (std::size_t i = 0; i < words; ++i) {
      if (!s.empty()) s += ' ';
      if (chance(0.3)) {
        s += pick(kGlue);
      } else if (chance(topical)) {
        s += pick(pool);
      } else {
        s += pick(filler);
      }
    }
    return s;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the bundled synthetic forum"};
  std::string out_dir = "data/synthetic";
  std::size_t n_threads = 600;
  std::uint64_t seed = 7;
  std::size_t n_labeled = 200;
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--threads", n_threads, "Number of threads");
  app.add_option("--labeled", n_labeled, "Number of labeled threads");
  app.add_option("--seed", seed, "Random seed");
  CLI11_PARSE(app, argc, argv);

  Gen g(seed);
  std::vector<threadminer::Thread> threads;
  std::vector<int> truth;  // class index or -1 for off-topic
  std::vector<std::string> authors;
  for (int i = 0; i < 150; ++i) authors.push_back("user" + std::to_string(i));

  for (std::size_t t = 0; t < n_threads; ++t) {
    threadminer::Thread th;
    char id[16];
    std::snprintf(id, sizeof id, "t%04zu", t);
    th.thread_id = id;
    const bool on_topic = g.chance(0.6);
    const int cls = on_topic ? static_cast<int>(g.below(kClasses.size())) : -1;
    truth.push_back(cls);

    std::string body;
    if (on_topic) {
      const Pool& pool = kClassPools[static_cast<std::size_t>(cls)];
      th.title = g.sentence(pool, 0.6, 4 + g.below(4));
      // Hacks and Experiences run longer, Hacks with many more lines.
      const std::size_t lines = cls == 0 ? 6 + g.below(6) : cls == 3 ? 3 + g.below(3) : 1 + g.below(3);
      const std::size_t words = cls == 3 ? 14 : 9;
      for (std::size_t l = 0; l < lines; ++l) {
        if (l) body += '\n';
        body += g.sentence(pool, 0.55, words + g.below(6));
      }
    } else {
      th.title = g.sentence(kOffTopic, 0.7, 3 + g.below(4), kChatter);
      const std::size_t lines = 1 + g.below(3);
      for (std::size_t l = 0; l < lines; ++l) {
        if (l) body += '\n';
        body += g.sentence(kOffTopic, 0.6, 8 + g.below(8), kChatter);
      }
    }
    th.posts.push_back({th.thread_id + "-p0", authors[g.below(authors.size())], std::nullopt, body});

    // Roughly 55% single-post threads, long tail after that.
    std::size_t replies = 0;
    while (g.chance(replies == 0 ? 0.45 : 0.6) && replies < 40) ++replies;
    for (std::size_t r = 0; r < replies; ++r) {
      th.posts.push_back({th.thread_id + "-p" + std::to_string(r + 1),
                          authors[g.below(authors.size())],
                          "2019-01-" + std::to_string(10 + r % 18) + "T12:00:00Z",
                          g.pick(kReplies)});
    }
    threads.push_back(std::move(th));
  }

  std::filesystem::create_directories(out_dir);
  const threadminer::ForumCorpus corpus("synthetic", threads);
  {
    std::ofstream f(std::filesystem::path(out_dir) / "corpus.jsonl");
    threadminer::write_corpus(f, corpus);
  }

  std::ofstream labels(std::filesystem::path(out_dir) / "labels.csv");
  std::ofstream ann(std::filesystem::path(out_dir) / "annotations.csv");
  labels << "thread_id,label\n";
  ann << "thread_id,annotator_id,label\n";
  std::size_t written = 0;
  for (std::size_t t = 0; t < threads.size() && written < n_labeled; ++t) {
    if (truth[t] < 0) continue;
    const auto& cls = kClasses[static_cast<std::size_t>(truth[t])];
    labels << threads[t].thread_id << ',' << cls << '\n';
    for (int a = 0; a < 5; ++a) {
      const auto& given = g.chance(0.85) ? cls : kClasses[g.below(kClasses.size())];
      ann << threads[t].thread_id << ",a" << a << ',' << given << '\n';
    }
    ++written;
  }
  std::cout << "wrote " << threads.size() << " threads, " << written << " labeled, to "
            << out_dir << "\n";
  return 0;
}
