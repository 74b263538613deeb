#include "threadminer/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "random.hpp"
#include "text_util.hpp"
#include "threadminer/classify.hpp"
#include "threadminer/corpus.hpp"
#include "threadminer/embedding.hpp"
#include "threadminer/error.hpp"
#include "threadminer/identify.hpp"
#include "threadminer/metrics.hpp"
#include "threadminer/preprocess.hpp"
#include "threadminer/threadspace.hpp"

namespace threadminer {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Independent streams of the master seed, one per consumer.
enum SeedStream : std::uint64_t { kEmbedSeed = 1, kForestSeed = 2, kFoldSeed = 3 };

std::uint64_t seed_for(const PipelineConfig& cfg, SeedStream s) {
  return detail::derive_seed(cfg.seed, s);
}

/// Stages output files as `<name>.tmp` and renames them on commit().
class OutputSet {
 public:
  explicit OutputSet(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::kIo, "cannot create output directory '" + dir + "'");
  }
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (committed_) return;
    for (const auto& [tmp, _] : staged_) {
      std::error_code ec;
      fs::remove(tmp, ec);
    }
  }

  std::ofstream open(const std::string& name, bool binary = false) {
    const fs::path final_path = fs::path(dir_) / name;
    fs::path tmp = final_path;
    tmp += ".tmp";
    staged_.emplace_back(tmp, final_path);
    std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error(ErrorKind::kIo, "cannot write '" + tmp.string() + "'");
    return out;
  }

  void write(const std::string& name, const std::string& content) {
    auto out = open(name);
    out << content;
    if (!out) throw Error(ErrorKind::kIo, "write failed for '" + name + "'");
  }

  std::vector<std::string> commit() {
    std::vector<std::string> written;
    for (const auto& [tmp, final_path] : staged_) {
      std::error_code ec;
      fs::rename(tmp, final_path, ec);
      if (ec) {
        // all or nothing: drop what was already moved
        for (const auto& w : written) fs::remove(w, ec);
        throw Error(ErrorKind::kIo, "cannot move output into '" + final_path.string() + "'");
      }
      written.push_back(final_path.string());
    }
    committed_ = true;
    return written;
  }

 private:
  std::string dir_;
  std::vector<std::pair<fs::path, fs::path>> staged_;
  bool committed_ = false;
};

/// Exclusive lock file in the output directory.
class DirLock {
 public:
  explicit DirLock(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    path_ = (fs::path(dir) / ".threadminer.lock").string();
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) {
      throw Error(ErrorKind::kIo, "output directory '" + dir +
                                      "' is locked by another run (remove " + path_ +
                                      " if stale)");
    }
    std::fclose(f);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }

 private:
  std::string path_;
};

void require_file(const std::string& path, const std::string& what, const std::string& hint) {
  if (path.empty()) {
    throw Error(ErrorKind::kConfig, what + " is not configured");
  }
  if (!fs::exists(path)) {
    throw Error(ErrorKind::kDependency, what + " not found at '" + path + "'" + hint);
  }
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Inputs {
  ForumCorpus corpus;
  StopwordSet stopwords;
  std::vector<TokenizedDoc> docs;
};

Inputs load_inputs(const PipelineConfig& cfg) {
  require_file(cfg.corpus, "corpus", "");
  Inputs in;
  in.corpus = load_corpus(cfg.corpus);
  if (!cfg.stopwords.empty()) {
    require_file(cfg.stopwords, "stopword list", "");
    in.stopwords = load_stopwords(cfg.stopwords);
  }
  in.docs = tokenize_corpus(in.corpus, in.stopwords);
  return in;
}

EmbeddingMatrix load_embedding(const PipelineConfig& cfg) {
  require_file(cfg.embedding_path(), "embedding", "; run train-embed first");
  return load_embedding_binary(cfg.embedding_path());
}

std::vector<KeywordSet> load_keyword_sets(const PipelineConfig& cfg, const StopwordSet& stop,
                                          std::ostream& log) {
  std::vector<KeywordSet> sets;
  for (const auto& ks : cfg.keyword_sets) {
    require_file(ks.path, "keyword set '" + ks.name + "'", "");
    sets.push_back(load_keyword_set(ks.path, ks.name, ks.threshold));
    for (const auto& w : unmatchable_keywords(sets.back(), stop)) {
      log << "warning: keyword '" << w << "' in set '" << ks.name
          << "' is altered by preprocessing and can never match\n";
    }
  }
  return sets;
}

struct LabeledData {
  LabelSet labels;
  std::vector<LabeledThread> examples;
  std::vector<std::string> ids;
  std::vector<std::string> skipped;  // unprojectable
};

LabeledData load_labeled(const PipelineConfig& cfg, const Inputs& in,
                         const EmbeddingMatrix& emb, std::ostream& log) {
  if (cfg.classes.size() < 2) throw Error(ErrorKind::kConfig, "at least two class.<name> entries are required");
  require_file(cfg.labels, "labels", "");
  LabeledData d;
  d.labels = load_labels(cfg.labels, in.corpus, cfg.class_names());
  if (!cfg.annotations.empty()) {
    require_file(cfg.annotations, "annotations", "");
    load_annotations(cfg.annotations, in.corpus, d.labels);
  }
  for (const auto& [id, label] : d.labels.labels) {
    const std::size_t pos = *in.corpus.position(id);
    const TokenizedDoc& doc = in.docs[pos];
    const bool projectable = std::any_of(doc.tokens.begin(), doc.tokens.end(),
                                         [&](const auto& t) { return emb.vocab().contains(t); });
    if (!projectable) {
      d.skipped.push_back(id);
      continue;
    }
    d.examples.push_back({&in.corpus.threads()[pos], &doc, *d.labels.class_index(label)});
    d.ids.push_back(id);
  }
  if (!d.skipped.empty()) {
    log << "warning: " << d.skipped.size()
        << " labeled thread(s) have no in-vocabulary token and were excluded\n";
  }
  for (const auto& spec : cfg.classes) {
    for (const auto& w : spec.words) {
      if (!emb.vocab().contains(w)) {
        log << "warning: class word '" << w << "' of class '" << spec.name
            << "' is not in the vocabulary\n";
      }
    }
  }
  return d;
}

EnsembleParams ensemble_params(const PipelineConfig& cfg) {
  EnsembleParams p = cfg.ensemble;
  p.forest.seed = seed_for(cfg, kForestSeed);
  return p;
}

}  // namespace

std::vector<std::string> run_stats(const PipelineConfig& cfg, std::ostream& log) {
  require_file(cfg.corpus, "corpus", "");
  const ForumCorpus corpus = load_corpus(cfg.corpus);
  const StatsReport r = corpus_stats(corpus);
  const std::string header = output_header(cfg);

  ordered_json j;
  j["header"] = header;
  j["threads"] = r.thread_count;
  j["posts"] = r.post_count;
  j["authors"] = r.author_count;
  j["frac_one_post"] = r.frac_one_post;
  j["frac_le_two_posts"] = r.frac_le_two_posts;
  ordered_json hist = ordered_json::array();
  for (const auto& [posts, threads] : r.posts_per_thread) {
    hist.push_back({{"posts", posts}, {"threads", threads}});
  }
  j["posts_per_thread"] = hist;

  std::string ccdf = header + "\nposts,ccdf\n";
  for (const auto& p : r.ccdf) ccdf += std::to_string(p.posts) + "," + fixed(p.fraction, 9) + "\n";

  OutputSet out(cfg.out_dir);
  out.write("stats.json", j.dump(2) + "\n");
  out.write("ccdf.csv", ccdf);
  log << "threads=" << r.thread_count << " posts=" << r.post_count
      << " authors=" << r.author_count << " one_post=" << fixed(r.frac_one_post, 4)
      << " le_two_posts=" << fixed(r.frac_le_two_posts, 4) << "\n";
  return out.commit();
}

std::vector<std::string> run_train_embed(const PipelineConfig& cfg, std::ostream& log) {
  const Inputs in = load_inputs(cfg);
  const Vocabulary vocab = build_vocabulary(in.docs, cfg.min_count);
  TrainParams params = cfg.embed;
  params.seed = seed_for(cfg, kEmbedSeed);
  TrainReport report;
  const EmbeddingMatrix emb = train_skipgram(in.docs, vocab, params, &report);
  const std::string header = output_header(cfg);

  ordered_json meta;
  meta["header"] = header;
  meta["vocab_size"] = emb.size();
  meta["dims"] = emb.dims();
  meta["deterministic"] = params.workers <= 1;
  meta["epoch_loss"] = report.epoch_loss;
  meta["fingerprint"] = detail::hex64(embedding_fingerprint(emb));

  OutputSet out(cfg.out_dir);
  {
    auto f = out.open("embedding.txt");
    save_embedding_text(emb, f);
  }
  {
    auto f = out.open("embedding.bin", true);
    save_embedding_binary(emb, f, header);
  }
  out.write("embedding.meta.json", meta.dump(2) + "\n");
  log << "vocabulary=" << emb.size() << " dims=" << emb.dims() << " final_loss="
      << (report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back()) << "\n";
  auto written = out.commit();
  if (!cfg.embedding.empty() && fs::path(cfg.embedding) != fs::path(cfg.out_dir) / "embedding.bin") {
    fs::copy_file(fs::path(cfg.out_dir) / "embedding.bin", cfg.embedding,
                  fs::copy_options::overwrite_existing);
    written.push_back(cfg.embedding);
  }
  return written;
}

std::vector<std::string> run_identify(const PipelineConfig& cfg, std::ostream& log) {
  if (cfg.keyword_sets.empty()) {
    throw Error(ErrorKind::kConfig, "identify needs at least one keyword_set.<name> entry");
  }
  const EmbeddingMatrix emb = load_embedding(cfg);
  const Inputs in = load_inputs(cfg);
  const auto sets = load_keyword_sets(cfg, in.stopwords, log);

  ThreadVectors projections;
  const SelectionResult sel = identify_threads(in.docs, emb, sets, cfg.t_sim,
                                               cfg.dump_projections ? &projections : nullptr);
  const std::string header = output_header(cfg);

  std::string csv = header + "\nthread_id,provenance,score\n";
  std::string audit = header + "\nthread_id,best_seed,score\n";
  std::set<std::string> all(sel.seeds);
  all.insert(sel.expanded.begin(), sel.expanded.end());
  for (const auto& id : all) {
    if (sel.seeds.contains(id)) {
      csv += detail::csv_field(id) + ",keyword,\n";
    } else {
      const auto& hit = sel.scores.at(id);
      csv += detail::csv_field(id) + ",similarity," + fixed(hit.score) + "\n";
      audit += detail::csv_field(id) + "," + detail::csv_field(hit.best_seed) + "," +
               fixed(hit.score) + "\n";
    }
  }

  ordered_json summary;
  summary["header"] = header;
  summary["threads"] = sel.total_threads;
  summary["keyword"] = sel.seeds.size();
  summary["similarity"] = sel.expanded.size();
  summary["selected"] = sel.selected();
  summary["not_selected"] = sel.total_threads - sel.selected();
  summary["selected_fraction"] = sel.selected_fraction();
  summary["selected_percent"] = static_cast<long long>(std::llround(100.0 * sel.selected_fraction()));
  summary["t_sim"] = cfg.t_sim;
  summary["unprojectable"] = sel.unprojectable;

  OutputSet out(cfg.out_dir);
  out.write("selection.csv", csv);
  out.write("expansion_audit.csv", audit);
  out.write("identify_summary.json", summary.dump(2) + "\n");
  if (cfg.dump_projections) {
    auto f = out.open("projections.csv");
    f << header << "\nthread_id";
    for (std::size_t i = 0; i < 2 * emb.dims(); ++i) f << ",c" << (i + 1);
    f << '\n';
    for (const auto& [id, tv] : projections) {
      f << detail::csv_field(id);
      for (double x : tv.full) f << ',' << fixed(x, 9);
      f << '\n';
    }
  }
  log << "keyword=" << sel.seeds.size() << " similarity=" << sel.expanded.size()
      << " selected=" << sel.selected() << "/" << sel.total_threads << " ("
      << std::llround(100.0 * sel.selected_fraction()) << "%)";
  if (!sel.unprojectable.empty()) log << " unprojectable=" << sel.unprojectable.size();
  log << "\n";
  if (sel.seeds.empty()) log << "warning: no thread passed keyword selection; nothing to expand\n";
  auto written = out.commit();
  if (!cfg.selection.empty() && fs::path(cfg.selection) != fs::path(cfg.out_dir) / "selection.csv") {
    fs::copy_file(fs::path(cfg.out_dir) / "selection.csv", cfg.selection,
                  fs::copy_options::overwrite_existing);
    written.push_back(cfg.selection);
  }
  return written;
}

std::vector<std::string> run_train(const PipelineConfig& cfg, std::ostream& log) {
  const EmbeddingMatrix emb = load_embedding(cfg);
  const Inputs in = load_inputs(cfg);
  const auto sets = load_keyword_sets(cfg, in.stopwords, log);
  const LabeledData data = load_labeled(cfg, in, emb, log);
  const EnsembleModel model =
      train_ensemble(data.examples, cfg.classes, emb, sets, ensemble_params(cfg));
  const std::string header = output_header(cfg);

  OutputSet out(cfg.out_dir);
  {
    auto f = out.open("model.bin", true);
    model.save(f, header);
  }
  ordered_json summary;
  summary["header"] = header;
  summary["classes"] = cfg.class_names();
  std::vector<std::size_t> per_class(cfg.classes.size(), 0);
  for (const auto& e : data.examples) ++per_class[e.label];
  summary["examples_per_class"] = per_class;
  summary["feature_count"] = model.feature_count();
  summary["excluded_unprojectable"] = data.skipped;
  out.write("train_summary.json", summary.dump(2) + "\n");
  log << "trained " << cfg.classes.size() << " forests on " << data.examples.size()
      << " labeled threads (" << model.feature_count() << " features)\n";
  auto written = out.commit();
  if (!cfg.model.empty() && fs::path(cfg.model) != fs::path(cfg.out_dir) / "model.bin") {
    fs::copy_file(fs::path(cfg.out_dir) / "model.bin", cfg.model,
                  fs::copy_options::overwrite_existing);
    written.push_back(cfg.model);
  }
  return written;
}

std::vector<std::string> run_predict(const PipelineConfig& cfg, std::ostream& log) {
  require_file(cfg.model_path(), "model", "; run train first");
  const EmbeddingMatrix emb = load_embedding(cfg);
  EnsembleModel model;
  {
    std::ifstream f(cfg.model_path(), std::ios::binary);
    if (!f) throw Error(ErrorKind::kIo, "cannot open model '" + cfg.model_path() + "'");
    model = EnsembleModel::load(f);
  }
  model.check_embedding(emb);
  const Inputs in = load_inputs(cfg);

  std::set<std::string> targets;
  if (cfg.predict_on == "selected") {
    require_file(cfg.selection_path(), "selection", "; run identify first or set predict_on = all");
    std::ifstream f(cfg.selection_path());
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty() || line[0] == '#' || line.starts_with("thread_id,")) continue;
      const auto fields = detail::split_csv(line);
      if (!in.corpus.find(fields[0])) {
        throw Error(ErrorKind::kValidation,
                    "selection lists thread '" + fields[0] + "' which is not in the corpus");
      }
      targets.insert(fields[0]);
    }
  } else {
    for (const auto& t : in.corpus.threads()) targets.insert(t.thread_id);
  }

  const std::string header = output_header(cfg);
  std::string csv = header + "\nthread_id,predicted_class";
  for (const auto& c : model.classes()) csv += ",vote_" + detail::csv_field(c.name);
  csv += "\n";
  std::size_t skipped = 0;
  std::vector<std::size_t> counts(model.classes().size(), 0);
  for (const auto& id : targets) {
    const std::size_t pos = *in.corpus.position(id);
    try {
      const Prediction p = model.predict(in.corpus.threads()[pos], in.docs[pos], emb);
      csv += detail::csv_field(id) + "," + detail::csv_field(model.classes()[p.label].name);
      for (std::size_t v : p.vote_counts) csv += "," + std::to_string(v);
      csv += "\n";
      ++counts[p.label];
    } catch (const UnprojectableThread&) {
      ++skipped;
    }
  }
  OutputSet out(cfg.out_dir);
  out.write("predictions.csv", csv);
  log << "predicted " << (targets.size() - skipped) << " threads";
  for (std::size_t c = 0; c < counts.size(); ++c) {
    log << " " << model.classes()[c].name << "=" << counts[c];
  }
  if (skipped) log << " (skipped " << skipped << " unprojectable)";
  log << "\n";
  return out.commit();
}

std::vector<std::string> run_evaluate(const PipelineConfig& cfg, std::ostream& log) {
  const EmbeddingMatrix emb = load_embedding(cfg);
  const Inputs in = load_inputs(cfg);
  const auto sets = load_keyword_sets(cfg, in.stopwords, log);
  const LabeledData data = load_labeled(cfg, in, emb, log);
  const EnsembleParams params = ensemble_params(cfg);

  std::vector<std::size_t> labels;
  for (const auto& e : data.examples) labels.push_back(e.label);

  EvalReport report = cross_validate(
      labels, cfg.class_names(), cfg.folds, seed_for(cfg, kFoldSeed),
      [&](std::span<const std::size_t> train_idx, std::span<const std::size_t> test_idx) {
        std::vector<LabeledThread> train;
        for (std::size_t i : train_idx) train.push_back(data.examples[i]);
        const EnsembleModel model = train_ensemble(train, cfg.classes, emb, sets, params);
        std::vector<std::size_t> predicted;
        for (std::size_t i : test_idx) {
          predicted.push_back(
              model.predict(*data.examples[i].thread, *data.examples[i].doc, emb).label);
        }
        return predicted;
      });

  if (!data.labels.annotations.empty()) {
    const RatingMatrix ratings = ratings_from_annotations(data.labels);
    AgreementReport a;
    a.subjects = ratings.size();
    a.raters = ratings.empty() ? 0 : std::accumulate(ratings[0].begin(), ratings[0].end(),
                                                     std::size_t{0});
    a.overall = fleiss_kappa(ratings);
    for (std::size_t c = 0; c < cfg.classes.size(); ++c) {
      a.per_class.push_back(fleiss_kappa_binary(ratings, c));
    }
    report.agreement = a;
  }
  for (const auto& id : data.skipped) {
    report.warnings.push_back("excluded unprojectable labeled thread '" + id + "'");
  }

  const std::string header = output_header(cfg);
  std::string folds_csv = header + "\nfold,samples,accuracy,weighted_f1\n";
  for (std::size_t f = 0; f < report.folds.size(); ++f) {
    const auto& fr = report.folds[f];
    folds_csv += std::to_string(f) + "," + std::to_string(fr.cm.total()) + "," +
                 fixed(fr.accuracy) + "," + fixed(fr.weighted_f1) + "\n";
  }
  OutputSet out(cfg.out_dir);
  out.write("eval.json", eval_report_json(report, header));
  out.write("eval.txt", header + "\n" + eval_report_table(report));
  out.write("eval_folds.csv", folds_csv);
  log << eval_report_table(report);
  return out.commit();
}

std::vector<std::string> run_subcommand(const std::string& name, const PipelineConfig& cfg,
                                        std::ostream& log) {
  using Runner = std::vector<std::string> (*)(const PipelineConfig&, std::ostream&);
  static const std::map<std::string, Runner> runners = {
      {"stats", run_stats},       {"train-embed", run_train_embed},
      {"identify", run_identify}, {"train", run_train},
      {"predict", run_predict},   {"evaluate", run_evaluate},
  };
  const auto it = runners.find(name);
  if (it == runners.end()) throw Error(ErrorKind::kConfig, "unknown subcommand '" + name + "'");
  validate_config(cfg);
  DirLock lock(cfg.out_dir);
  return it->second(cfg, log);
}

}  // namespace threadminer
