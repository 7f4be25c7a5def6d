// Copyright 2026 The AAPR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// aapr: command-line front end for corpus preparation, training and rating.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "aapr/aapr.hpp"

namespace fs = std::filesystem;
using namespace aapr;

namespace {

struct ModelFlags {
  std::size_t embed_dim = 128;
  std::size_t word_filters = 64, word_filter_size = 3;
  std::size_t sentence_filters = 64, sentence_filter_size = 2;
  std::size_t attention_dim = 128;
  std::size_t max_words = 32, max_sentences = 24, max_authors = 8;
  std::string ablation = "full";
  std::vector<std::string> mask_modules;
};

struct TrainFlags {
  std::size_t batch_size = 32;
  std::size_t epochs = 5;
  std::size_t eval_every = 50;
  double clip_norm = 5.0;
  double dropout = 0.5;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

struct VocabFlags {
  std::string words, authors;
};

void add_model_flags(CLI::App* app, ModelFlags& f) {
  app->add_option("--embed-dim", f.embed_dim, "word and author embedding size")->capture_default_str();
  app->add_option("--word-filters", f.word_filters)->capture_default_str();
  app->add_option("--word-filter-size", f.word_filter_size)->capture_default_str();
  app->add_option("--sentence-filters", f.sentence_filters)->capture_default_str();
  app->add_option("--sentence-filter-size", f.sentence_filter_size)->capture_default_str();
  app->add_option("--attention-dim", f.attention_dim)->capture_default_str();
  app->add_option("--max-words", f.max_words, "words kept per sentence")->capture_default_str();
  app->add_option("--max-sentences", f.max_sentences, "sentences kept per module")->capture_default_str();
  app->add_option("--max-authors", f.max_authors, "authors kept per paper")->capture_default_str();
  app->add_option("--ablation", f.ablation)
      ->check(CLI::IsMember({"full", "no_attention", "no_module"}))
      ->capture_default_str();
  app->add_option("--mask-module", f.mask_modules, "module(s) removed from the model input")
      ->check(CLI::IsMember(std::vector<std::string>(kModuleNames.begin(), kModuleNames.end())));
}

void add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--seed", f.seed)->capture_default_str();
  app->add_option("--batch-size", f.batch_size)->capture_default_str();
  app->add_option("--epochs", f.epochs)->capture_default_str();
  app->add_option("--eval-every", f.eval_every, "validate after this many updates")->capture_default_str();
  app->add_option("--clip-norm", f.clip_norm)->capture_default_str();
  app->add_option("--dropout", f.dropout)->capture_default_str();
  app->add_option("--lr", f.lr)->capture_default_str();
}

void add_vocab_flags(CLI::App* app, VocabFlags& f, bool required) {
  auto* w = app->add_option("--vocab-words", f.words, "word vocabulary file");
  auto* a = app->add_option("--vocab-authors", f.authors, "author vocabulary file");
  if (required) {
    w->required()->check(CLI::ExistingFile);
    a->required()->check(CLI::ExistingFile);
  }
}

ModuleMask parse_mask(const std::vector<std::string>& names) {
  std::vector<Module> modules;
  for (const auto& n : names) modules.push_back(module_from_name(n));
  return mask_of(modules);
}

ModelConfig model_config(const ModelFlags& f, const Vocab& words, const Vocab& authors) {
  ModelConfig c;
  c.word_vocab = words.size();
  c.author_vocab = authors.size();
  c.embed_dim = f.embed_dim;
  c.word_filters = f.word_filters;
  c.word_filter_size = f.word_filter_size;
  c.sentence_filters = f.sentence_filters;
  c.sentence_filter_size = f.sentence_filter_size;
  c.attention_dim = f.attention_dim;
  c.lengths = Lengths{f.max_words, f.max_sentences, f.max_authors};
  c.ablation = ablation_from_name(f.ablation);
  c.module_mask = parse_mask(f.mask_modules);
  c.validate();
  return c;
}

TrainConfig train_config(const TrainFlags& f) {
  TrainConfig c;
  c.batch_size = f.batch_size;
  c.epochs = f.epochs;
  c.eval_every = f.eval_every;
  c.clip_norm = f.clip_norm;
  c.dropout_rate = f.dropout;
  c.seed = f.seed;
  c.adam.lr = f.lr;
  c.validate();
  return c;
}

std::size_t ingest_threads() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("PAPER_RATER_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(cap, &end, 10);
    if (end == cap || *end != '\0' || v == 0) {
      throw ConfigError(std::string("PAPER_RATER_THREADS must be a positive integer, got '") + cap + "'");
    }
    n = std::min<std::size_t>(n, v);
  }
  return n;
}

std::map<std::string, std::string> read_venues(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open venue table " + path);
  std::map<std::string, std::string> venues;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("venue line without a tab", lineno);
    venues[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return venues;
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << body;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const std::string& src, std::string venues_path, const std::string& accept_path,
               const std::string& out_path) {
  std::vector<fs::path> files;
  if (fs::is_directory(src)) {
    for (const auto& e : fs::directory_iterator(src)) {
      if (e.is_regular_file() && e.path().extension() == ".tex") files.push_back(e.path());
    }
  }
  if (files.empty()) throw ConfigError("no input files in " + src);
  std::sort(files.begin(), files.end());
  if (venues_path.empty()) venues_path = (fs::path(src) / "venue.tsv").string();
  const auto venues = read_venues(venues_path);
  const AcceptList accept = AcceptList::load(accept_path);

  std::size_t no_venue = 0, unreadable = 0;
  std::vector<RawPaper> papers;
  for (const auto& f : files) {
    const std::string id = f.stem().string();
    auto v = venues.find(id);
    if (v == venues.end()) {
      std::cerr << "warning: " << id << ": no venue entry, skipped\n";
      ++no_venue;
      continue;
    }
    std::ifstream in(f, std::ios::binary);
    std::stringstream buf;
    if (!in || !(buf << in.rdbuf())) {
      std::cerr << "warning: " << id << ": unreadable file, skipped\n";
      ++unreadable;
      continue;
    }
    papers.push_back({.paper_id = id, .latex_source = buf.str(), .venue = v->second});
  }

  std::vector<PaperRecord> records;
  std::size_t malformed = 0;
  for (auto& outcome : ingest(papers, accept, ingest_threads())) {
    for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << '\n';
    if (outcome.record) {
      records.push_back(std::move(*outcome.record));
    } else {
      ++malformed;
    }
  }
  write_jsonl(out_path, records);

  const auto positive = static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const PaperRecord& r) { return r.label == 1; }));
  std::cout << "total " << records.size() << "\npositive " << positive << "\nnegative "
            << records.size() - positive << '\n';
  if (no_venue + unreadable + malformed > 0) {
    std::cerr << "skipped " << no_venue + unreadable + malformed << " (no venue " << no_venue << ", unreadable "
              << unreadable << ", malformed " << malformed << ")\n";
  }
  return 0;
}

int cmd_split(const std::string& corpus, const std::vector<double>& ratios, std::uint64_t seed,
              const std::string& out_dir) {
  if (ratios.size() != 3) throw ConfigError("--ratios takes three values");
  auto split = split_corpus(read_jsonl(corpus), {ratios[0], ratios[1], ratios[2]}, seed);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_jsonl((dir / "train.jsonl").string(), split.train);
  write_jsonl((dir / "val.jsonl").string(), split.val);
  write_jsonl((dir / "test.jsonl").string(), split.test);
  std::cout << "train " << split.train.size() << "\nval " << split.val.size() << "\ntest " << split.test.size()
            << '\n';
  return 0;
}

int cmd_vocab(const std::string& corpus, std::size_t word_cap, std::size_t author_cap, const VocabFlags& out) {
  const auto records = read_jsonl(corpus);
  const auto words = Vocab::build(records, VocabField::words, word_cap);
  const auto authors = Vocab::build(records, VocabField::authors, author_cap);
  words.save(out.words);
  authors.save(out.authors);
  std::cout << "words " << words.size() << "\nauthors " << authors.size() << '\n';
  return 0;
}

int cmd_synth(std::size_t n, std::uint64_t seed, double separation, const std::string& out) {
  write_jsonl(out, synth_corpus(n, seed, separation));
  return 0;
}

struct TrainOutputs {
  std::string checkpoint, history, updates, manifest;
};

TrainOutputs outputs_in(const std::string& dir) {
  const fs::path d(dir);
  return {(d / "model.bin").string(), (d / "history.csv").string(), (d / "updates.csv").string(),
          (d / "manifest.json").string()};
}

void write_updates_csv(const std::string& path, const std::vector<UpdateRecord>& updates) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << "step,loss,grad_norm,clipped_grad_norm\n";
  char buf[128];
  for (const auto& u : updates) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", u.step, u.loss, u.grad_norm, u.clipped_grad_norm);
    out << buf;
  }
}

/// Runs one training job described entirely by `m` and fills its outputs.
void run_training(RunManifest& m, const std::string& out_dir) {
  const auto words = Vocab::load(m.inputs.at("vocab_words"));
  const auto authors = Vocab::load(m.inputs.at("vocab_authors"));
  const auto train_set = encode_all(read_jsonl(m.inputs.at("train")), words, authors, m.model.lengths);
  const auto val_set = encode_all(read_jsonl(m.inputs.at("val")), words, authors, m.model.lengths);

  auto result = train(m.model, train_set, val_set, m.train, [](const HistoryEntry& h) {
    std::fprintf(stderr, "step %zu loss %.6f val %.4f\n", h.step, h.train_loss, h.val_accuracy);
  });

  fs::create_directories(out_dir);
  const TrainOutputs out = outputs_in(out_dir);
  result.best.save(out.checkpoint);
  {
    std::ofstream h(out.history, std::ios::binary);
    if (!h) throw ConfigError("cannot write " + out.history);
    write_history_csv(h, result.history);
  }
  write_updates_csv(out.updates, result.updates);
  m.outputs = {{"checkpoint", out.checkpoint}, {"history", out.history}, {"updates", out.updates}};
  m.output_checksums.clear();
  for (const auto& [role, path] : m.outputs) m.output_checksums[role] = file_checksum(path);
  m.save(out.manifest);
  std::cout << "best_step " << result.best_step << "\nbest_val_accuracy " << result.best_val_accuracy
            << "\ncheckpoint " << out.checkpoint << '\n';
}

int cmd_train(const std::string& corpus, const std::string& val, const VocabFlags& vocab, const ModelFlags& mf,
              const TrainFlags& tf, const std::string& out_dir) {
  RunManifest m;
  const auto words = Vocab::load(vocab.words);
  const auto authors = Vocab::load(vocab.authors);
  m.model = model_config(mf, words, authors);
  m.train = train_config(tf);
  m.inputs = {{"train", corpus}, {"val", val}, {"vocab_words", vocab.words}, {"vocab_authors", vocab.authors}};
  for (const auto& [role, path] : m.inputs) m.checksums[path] = file_checksum(path);
  run_training(m, out_dir);
  return 0;
}

int cmd_replay(const std::string& manifest_path, const std::string& out_dir) {
  const RunManifest recorded = RunManifest::load(manifest_path);
  recorded.verify_inputs();
  RunManifest m = recorded;
  run_training(m, out_dir);
  bool same = true;
  for (const auto& [role, sum] : recorded.output_checksums) {
    const auto it = m.output_checksums.find(role);
    const bool match = it != m.output_checksums.end() && it->second == sum;
    std::cout << role << (match ? " reproduced" : " DIFFERS") << '\n';
    same = same && match;
  }
  return same ? 0 : 1;
}

int cmd_eval(const std::string& checkpoint, const std::string& corpus, const VocabFlags& vocab,
             const std::vector<std::string>& mask, bool rp, std::uint64_t seed) {
  const auto records = read_jsonl(corpus);
  if (records.empty()) throw ConfigError("empty evaluation corpus " + corpus);
  if (rp) {
    std::vector<int> labels;
    for (const auto& r : records) labels.push_back(r.label);
    const auto res = rp_baseline(labels, seed);
    std::cout << "accuracy " << res.accuracy << "\nn " << res.n << '\n';
    return 0;
  }
  Mhcnn model = Mhcnn::load(checkpoint);
  const auto data = encode_all(records, Vocab::load(vocab.words), Vocab::load(vocab.authors),
                               model.config().lengths);
  const auto res = evaluate(model, data, parse_mask(mask));
  std::cout << "accuracy " << res.accuracy << "\nn " << res.n << '\n';
  return 0;
}

nlohmann::ordered_json by_module(const std::vector<double>& w) {
  nlohmann::ordered_json j;
  for (std::size_t i = 0; i < kNumModules && i < w.size(); ++i) j[std::string(kModuleNames[i])] = w[i];
  return j;
}

int cmd_predict(const std::string& checkpoint, const std::string& tex, const VocabFlags& vocab) {
  const auto parsed = latex::parse_latex(read_file(tex));
  for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << '\n';
  const PaperRecord record = make_record(fs::path(tex).stem().string(), 0, parsed);
  Mhcnn model = Mhcnn::load(checkpoint);
  const auto paper = encode(record, Vocab::load(vocab.words), Vocab::load(vocab.authors), model.config().lengths);
  auto [probs, trace] = model.explain(paper);

  nlohmann::ordered_json j;
  j["paper_id"] = record.paper_id;
  j["p_accept"] = probs[1];
  j["ablation"] = std::string(ablation_name(model.config().ablation));
  if (model.config().ablation == Ablation::full) {
    nlohmann::ordered_json att;
    att["modules"] = by_module(trace.modules);
    att["title_words"] = trace.title_words;
    nlohmann::ordered_json sentences, words;
    for (std::size_t m = 0; m < kNumTextModules; ++m) {
      const std::string name(kModuleNames[m + 2]);
      sentences[name] = trace.sentences[m];
      words[name] = trace.words[m];
    }
    att["sentences"] = sentences;
    att["words"] = words;
    j["attention"] = att;
  } else {
    j["attention"] = nullptr;
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_ablate(const std::string& train_path, const std::string& val_path, const std::string& test_path,
               const VocabFlags& vocab, const ModelFlags& mf, const TrainFlags& tf, bool retrain,
               const std::string& out) {
  const auto words = Vocab::load(vocab.words);
  const auto authors = Vocab::load(vocab.authors);
  const ModelConfig base = model_config(mf, words, authors);
  const auto train_set = encode_all(read_jsonl(train_path), words, authors, base.lengths);
  const auto val_set = encode_all(read_jsonl(val_path), words, authors, base.lengths);
  const auto test_set = encode_all(read_jsonl(test_path), words, authors, base.lengths);
  const auto report = run_ablation_suite(train_set, val_set, test_set, base, train_config(tf), retrain,
                                         [](const std::string& v) { std::cerr << "done " << v << '\n'; });
  std::ostringstream tsv;
  write_report_tsv(tsv, report);
  if (out.empty()) {
    std::cout << tsv.str();
  } else {
    write_text(out, tsv.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aapr: rate academic papers from their LaTeX source"};
  app.require_subcommand(1);

  std::string src, venues, accept, out, corpus, val, test, checkpoint, tex, manifest;
  std::uint64_t seed = 1;
  VocabFlags vocab;
  ModelFlags mf;
  TrainFlags tf;

  auto* ingest_cmd = app.add_subcommand("ingest", "parse a directory of .tex files into JSONL");
  ingest_cmd->add_option("src", src, "directory of .tex files")->required();
  ingest_cmd->add_option("--venues", venues, "paper_id<TAB>venue table (default: <src>/venue.tsv)");
  ingest_cmd->add_option("--accept", accept, "accepted venues, one per line")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--out", out, "output JSONL")->required();

  std::vector<double> ratios{0.896, 0.052, 0.052};
  auto* split_cmd = app.add_subcommand("split", "shuffle a corpus into train/val/test");
  split_cmd->add_option("--corpus", corpus)->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--ratios", ratios, "train val test fractions")->expected(3)->capture_default_str();
  split_cmd->add_option("--seed", seed)->capture_default_str();
  split_cmd->add_option("--out", out, "output directory")->required();

  std::size_t word_cap = kDefaultWordVocab, author_cap = kDefaultAuthorVocab;
  auto* vocab_cmd = app.add_subcommand("vocab", "build word and author vocabularies from a training split");
  vocab_cmd->add_option("--corpus", corpus)->required()->check(CLI::ExistingFile);
  vocab_cmd->add_option("--word-cap", word_cap)->capture_default_str();
  vocab_cmd->add_option("--author-cap", author_cap)->capture_default_str();
  vocab_cmd->add_option("--vocab-words", vocab.words)->required();
  vocab_cmd->add_option("--vocab-authors", vocab.authors)->required();

  std::size_t n = 2000;
  double separation = 0.9;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic corpus");
  synth_cmd->add_option("--n", n)->capture_default_str();
  synth_cmd->add_option("--seed", seed)->capture_default_str();
  synth_cmd->add_option("--separation", separation)->capture_default_str();
  synth_cmd->add_option("--out", out)->required();

  auto* train_cmd = app.add_subcommand("train", "train a model, keeping the best validation checkpoint");
  train_cmd->add_option("--corpus", corpus, "training JSONL")->check(CLI::ExistingFile);
  train_cmd->add_option("--val", val, "validation JSONL")->check(CLI::ExistingFile);
  train_cmd->add_option("--manifest", manifest, "rerun a recorded manifest")->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out, "output directory")->required();
  add_vocab_flags(train_cmd, vocab, false);
  add_model_flags(train_cmd, mf);
  add_train_flags(train_cmd, tf);

  std::vector<std::string> mask;
  bool rp = false;
  auto* eval_cmd = app.add_subcommand("eval", "accuracy of a checkpoint on a corpus");
  eval_cmd->add_option("--checkpoint", checkpoint)->check(CLI::ExistingFile);
  eval_cmd->add_option("--corpus", corpus)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--mask-module", mask)
      ->check(CLI::IsMember(std::vector<std::string>(kModuleNames.begin(), kModuleNames.end())));
  eval_cmd->add_flag("--rp", rp, "score the random-prediction baseline instead");
  eval_cmd->add_option("--seed", seed, "seed of the random baseline")->capture_default_str();
  add_vocab_flags(eval_cmd, vocab, false);

  auto* predict_cmd = app.add_subcommand("predict", "rate one LaTeX file and print attention weights as JSON");
  predict_cmd->add_option("tex", tex)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  add_vocab_flags(predict_cmd, vocab, true);

  bool retrain = false;
  auto* ablate_cmd = app.add_subcommand("ablate", "train all variants and write the module-removal table");
  ablate_cmd->add_option("--corpus", corpus, "training JSONL")->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--val", val)->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--test", test)->required()->check(CLI::ExistingFile);
  ablate_cmd->add_flag("--retrain", retrain, "retrain without each module instead of masking");
  ablate_cmd->add_option("--out", out, "TSV path (default: stdout)");
  add_vocab_flags(ablate_cmd, vocab, true);
  add_model_flags(ablate_cmd, mf);
  add_train_flags(ablate_cmd, tf);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest_cmd) return cmd_ingest(src, venues, accept, out);
    if (*split_cmd) return cmd_split(corpus, ratios, seed, out);
    if (*vocab_cmd) return cmd_vocab(corpus, word_cap, author_cap, vocab);
    if (*synth_cmd) return cmd_synth(n, seed, separation, out);
    if (*train_cmd) {
      if (!manifest.empty()) return cmd_replay(manifest, out);
      if (corpus.empty() || val.empty() || vocab.words.empty() || vocab.authors.empty()) {
        throw CLI::RequiredError("train needs --corpus, --val, --vocab-words and --vocab-authors, or --manifest");
      }
      return cmd_train(corpus, val, vocab, mf, tf, out);
    }
    if (*eval_cmd) {
      if (!rp && (checkpoint.empty() || vocab.words.empty() || vocab.authors.empty())) {
        throw CLI::RequiredError("eval needs --checkpoint, --vocab-words and --vocab-authors, or --rp");
      }
      return cmd_eval(checkpoint, corpus, vocab, mask, rp, seed);
    }
    if (*predict_cmd) return cmd_predict(checkpoint, tex, vocab);
    if (*ablate_cmd) return cmd_ablate(corpus, val, test, vocab, mf, tf, retrain, out);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
