#include "threadminer/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "text_util.hpp"
#include "threadminer/error.hpp"

namespace threadminer {

namespace fs = std::filesystem;

std::string PipelineConfig::embedding_path() const {
  return embedding.empty() ? (fs::path(out_dir) / "embedding.bin").string() : embedding;
}
std::string PipelineConfig::model_path() const {
  return model.empty() ? (fs::path(out_dir) / "model.bin").string() : model;
}
std::string PipelineConfig::selection_path() const {
  return selection.empty() ? (fs::path(out_dir) / "selection.csv").string() : selection;
}

std::vector<std::string> PipelineConfig::class_names() const {
  std::vector<std::string> names;
  for (const auto& c : classes) names.push_back(c.name);
  return names;
}

const std::vector<std::pair<std::string, std::string>>& config_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"corpus", "JSONL forum dump"},
      {"stopwords", "stopword list (optional)"},
      {"labels", "labels CSV (thread_id,label)"},
      {"annotations", "annotations CSV (thread_id,annotator_id,label), optional"},
      {"out_dir", "output directory"},
      {"embedding", "embedding bundle (default <out_dir>/embedding.bin)"},
      {"model", "model bundle (default <out_dir>/model.bin)"},
      {"selection", "selection CSV (default <out_dir>/selection.csv)"},
      {"seed", "master seed"},
      {"min_count", "minimum token frequency for the vocabulary"},
      {"dims", "embedding dimension"},
      {"window", "skip-gram window"},
      {"epochs", "training epochs"},
      {"negatives", "negative samples per pair"},
      {"learning_rate", "initial learning rate"},
      {"min_learning_rate", "final learning rate"},
      {"subsample", "frequent-word subsampling threshold (0 disables)"},
      {"workers", "embedding/forest worker threads (1 = deterministic embedding)"},
      {"t_sim", "cosine threshold for similarity expansion"},
      {"trees", "trees per forest"},
      {"max_depth", "tree depth limit (0 = unlimited)"},
      {"min_leaf", "minimum samples per leaf"},
      {"max_features", "features tried per split (0 = ceil(sqrt(F)))"},
      {"bootstrap", "bootstrap samples per tree (true/false)"},
      {"boost", "sample weight of the favoured class in its forest"},
      {"contextual", "append contextual features (true/false)"},
      {"folds", "cross-validation folds"},
      {"predict_on", "threads to classify: selected | all"},
      {"dump_projections", "write projections.csv during identify (true/false)"},
  };
  return keys;
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw Error(ErrorKind::kConfig,
              "config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    bad_value(key, v, "a non-negative integer");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

std::vector<std::string> split_words(const std::string& v) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : v) {
    if (ch == ' ' || ch == ',' || ch == '\t') {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

KeywordSetConfig& keyword_set(PipelineConfig& cfg, const std::string& name) {
  for (auto& ks : cfg.keyword_sets) {
    if (ks.name == name) return ks;
  }
  cfg.keyword_sets.push_back({name, "", 1});
  return cfg.keyword_sets.back();
}

}  // namespace

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value,
                   const std::string& base_dir) {
  const std::string& v = value;
  if (key == "corpus") cfg.corpus = resolve(base_dir, v);
  else if (key == "stopwords") cfg.stopwords = resolve(base_dir, v);
  else if (key == "labels") cfg.labels = resolve(base_dir, v);
  else if (key == "annotations") cfg.annotations = resolve(base_dir, v);
  else if (key == "out_dir") cfg.out_dir = resolve(base_dir, v);
  else if (key == "embedding") cfg.embedding = resolve(base_dir, v);
  else if (key == "model") cfg.model = resolve(base_dir, v);
  else if (key == "selection") cfg.selection = resolve(base_dir, v);
  else if (key == "seed") cfg.seed = parse_uint(key, v);
  else if (key == "min_count") cfg.min_count = parse_uint(key, v);
  else if (key == "dims") cfg.embed.dims = parse_uint(key, v);
  else if (key == "window") cfg.embed.window = parse_uint(key, v);
  else if (key == "epochs") cfg.embed.epochs = parse_uint(key, v);
  else if (key == "negatives") cfg.embed.negatives = parse_uint(key, v);
  else if (key == "learning_rate") cfg.embed.learning_rate = parse_double(key, v);
  else if (key == "min_learning_rate") cfg.embed.min_learning_rate = parse_double(key, v);
  else if (key == "subsample") cfg.embed.subsample = parse_double(key, v);
  else if (key == "workers") {
    cfg.embed.workers = parse_uint(key, v);
    cfg.ensemble.forest.workers = cfg.embed.workers;
  }
  else if (key == "t_sim") cfg.t_sim = parse_double(key, v);
  else if (key == "trees") cfg.ensemble.forest.trees = parse_uint(key, v);
  else if (key == "max_depth") cfg.ensemble.forest.max_depth = parse_uint(key, v);
  else if (key == "min_leaf") cfg.ensemble.forest.min_leaf = parse_uint(key, v);
  else if (key == "max_features") cfg.ensemble.forest.max_features = parse_uint(key, v);
  else if (key == "bootstrap") cfg.ensemble.forest.bootstrap = parse_bool(key, v);
  else if (key == "boost") cfg.ensemble.boost = parse_double(key, v);
  else if (key == "contextual") cfg.ensemble.use_contextual = parse_bool(key, v);
  else if (key == "folds") cfg.folds = parse_uint(key, v);
  else if (key == "predict_on") {
    if (v != "selected" && v != "all") bad_value(key, v, "'selected' or 'all'");
    cfg.predict_on = v;
  }
  else if (key == "dump_projections") cfg.dump_projections = parse_bool(key, v);
  else if (key.starts_with("class.") && key.size() > 6) {
    const std::string name = key.substr(6);
    auto words = split_words(v);
    if (words.empty()) bad_value(key, v, "at least one class word");
    for (auto& c : cfg.classes) {
      if (c.name == name) {
        c.words = std::move(words);
        return;
      }
    }
    cfg.classes.push_back({name, std::move(words)});
  } else if (key.starts_with("keyword_set.") && key.size() > 12) {
    keyword_set(cfg, key.substr(12)).path = resolve(base_dir, v);
  } else if (key.starts_with("keyword_threshold.") && key.size() > 18) {
    keyword_set(cfg, key.substr(18)).threshold = parse_uint(key, v);
  } else {
    throw Error(ErrorKind::kConfig, "unknown config key '" + key + "'");
  }
}

PipelineConfig parse_config(const std::string& text, const std::string& base_dir) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = detail::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::kConfig,
                  "config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(detail::trim(view.substr(0, eq)));
    const std::string value(detail::trim(view.substr(eq + 1)));
    try {
      apply_setting(cfg, key, value, base_dir);
    } catch (const Error& e) {
      throw Error(e.kind(), "config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::path(path).parent_path().string());
}

void validate_config(const PipelineConfig& cfg) {
  const auto fail = [](const std::string& msg) { throw Error(ErrorKind::kConfig, msg); };
  if (cfg.embed.dims < 1) fail("dims must be >= 1");
  if (cfg.embed.window < 1) fail("window must be >= 1");
  if (cfg.embed.epochs < 1) fail("epochs must be >= 1");
  if (cfg.min_count < 1) fail("min_count must be >= 1");
  if (!(cfg.t_sim > 0.0 && cfg.t_sim <= 1.0)) fail("t_sim must be in (0, 1]");
  if (!(cfg.ensemble.boost > 0.0)) fail("boost must be > 0");
  if (cfg.ensemble.forest.trees < 1) fail("trees must be >= 1");
  if (cfg.ensemble.forest.min_leaf < 1) fail("min_leaf must be >= 1");
  if (cfg.folds < 2) fail("folds must be >= 2");
  if (!(cfg.embed.learning_rate > 0)) fail("learning_rate must be > 0");
  for (const auto& ks : cfg.keyword_sets) {
    if (ks.path.empty()) fail("keyword set '" + ks.name + "' has a threshold but no file");
    if (ks.threshold < 1) fail("keyword set '" + ks.name + "' needs threshold >= 1");
  }
}

std::string canonical_config(const PipelineConfig& cfg) {
  std::ostringstream o;
  o.precision(17);
  o << "corpus=" << cfg.corpus << "\nstopwords=" << cfg.stopwords << "\nlabels=" << cfg.labels
    << "\nannotations=" << cfg.annotations << "\nembedding=" << cfg.embedding_path()
    << "\nmodel=" << cfg.model_path() << "\nselection=" << cfg.selection_path()
    << "\nseed=" << cfg.seed << "\nmin_count=" << cfg.min_count << "\ndims=" << cfg.embed.dims
    << "\nwindow=" << cfg.embed.window << "\nepochs=" << cfg.embed.epochs
    << "\nnegatives=" << cfg.embed.negatives << "\nlearning_rate=" << cfg.embed.learning_rate
    << "\nmin_learning_rate=" << cfg.embed.min_learning_rate
    << "\nsubsample=" << cfg.embed.subsample << "\nworkers=" << cfg.embed.workers
    << "\nt_sim=" << cfg.t_sim << "\ntrees=" << cfg.ensemble.forest.trees
    << "\nmax_depth=" << cfg.ensemble.forest.max_depth
    << "\nmin_leaf=" << cfg.ensemble.forest.min_leaf
    << "\nmax_features=" << cfg.ensemble.forest.max_features
    << "\nbootstrap=" << cfg.ensemble.forest.bootstrap << "\nboost=" << cfg.ensemble.boost
    << "\ncontextual=" << cfg.ensemble.use_contextual << "\nfolds=" << cfg.folds
    << "\npredict_on=" << cfg.predict_on << "\ndump_projections=" << cfg.dump_projections
    << '\n';
  for (const auto& ks : cfg.keyword_sets) {
    o << "keyword_set." << ks.name << '=' << ks.path << "\nkeyword_threshold." << ks.name << '='
      << ks.threshold << '\n';
  }
  for (const auto& c : cfg.classes) {
    o << "class." << c.name << '=';
    for (std::size_t i = 0; i < c.words.size(); ++i) o << (i ? " " : "") << c.words[i];
    o << '\n';
  }
  return o.str();
}

std::uint64_t config_hash(const PipelineConfig& cfg) {
  return detail::fnv1a64(canonical_config(cfg));
}

std::string output_header(const PipelineConfig& cfg) {
  return std::string("# threadminer ") + kToolVersion + " config=" +
         detail::hex64(config_hash(cfg)) + " seed=" + std::to_string(cfg.seed);
}

}  // namespace threadminer
