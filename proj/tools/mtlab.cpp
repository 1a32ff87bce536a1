// mtlab: command-line front end for the translation laboratory.
//
// Exit status: 0 on success, 1 on a runtime error, 2 on a usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "mtlab/analysis.hpp"
#include "mtlab/checkpoint.hpp"
#include "mtlab/config_file.hpp"
#include "mtlab/corpus.hpp"
#include "mtlab/decode.hpp"
#include "mtlab/hashing.hpp"
#include "mtlab/metrics.hpp"
#include "mtlab/parallel.hpp"
#include "mtlab/subword.hpp"
#include "mtlab/synthetic.hpp"
#include "mtlab/training.hpp"

namespace fs = std::filesystem;
using namespace mtlab;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kManifest = "manifest.txt";
constexpr const char* kVocabFile = "vocab.txt";
constexpr const char* kBestCheckpoint = "best.ckpt";
constexpr const char* kStage1Checkpoint = "stage1.ckpt";
constexpr const char* kTrainLog = "trainlog.tsv";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags that override config-file values. Unset flags leave the file (or the
// built-in default) in place.
struct Overrides {
  std::optional<int> layers, heads, d_model, d_ff, max_len;
  std::optional<double> dropout, label_smoothing;
  std::optional<int> max_steps, validate_every, batch_size, warmup_steps;
  std::optional<double> learning_rate, grad_clip;
  std::optional<std::uint64_t> seed;

  void add_model_flags(CLI::App* app) {
    app->add_option("--layers", layers, "Encoder and decoder layers (default 2)");
    app->add_option("--heads", heads, "Attention heads (default 4)");
    app->add_option("--d-model", d_model, "Embedding width (default 128)");
    app->add_option("--d-ff", d_ff, "Feed-forward width (default 256)");
    app->add_option("--max-len", max_len, "Maximum tokens per sentence (default 64)");
  }

  void add_train_flags(CLI::App* app) {
    app->add_option("--dropout", dropout, "Dropout probability (default 0.1)");
    app->add_option("--label-smoothing", label_smoothing, "Label smoothing (default 0)");
    app->add_option("--max-steps", max_steps, "Optimizer updates (default 2000)");
    app->add_option("--validate-every", validate_every, "Dev validation interval in steps (default 100)");
    app->add_option("--batch-size", batch_size, "Sentences per batch (default 15)");
    app->add_option("--lr", learning_rate, "Peak learning rate (default 0.0005)");
    app->add_option("--warmup", warmup_steps, "Warmup steps (default 400)");
    app->add_option("--grad-clip", grad_clip, "Global gradient-norm limit (default 1)");
    app->add_option("--seed", seed, "Seed for initialisation, batching and dropout (default 1)");
  }

  void apply(ModelConfig& m, TrainConfig& t) const {
    if (layers) m.layers = *layers;
    if (heads) m.heads = *heads;
    if (d_model) m.d_model = *d_model;
    if (d_ff) m.d_ff = *d_ff;
    if (max_len) m.max_len = *max_len;
    if (dropout) m.dropout = *dropout;
    if (label_smoothing) m.label_smoothing = *label_smoothing;
    if (max_steps) t.max_steps = *max_steps;
    if (validate_every) t.validate_every = *validate_every;
    if (batch_size) t.batch_size = *batch_size;
    if (learning_rate) t.learning_rate = *learning_rate;
    if (warmup_steps) t.warmup_steps = *warmup_steps;
    if (grad_clip) t.grad_clip = *grad_clip;
    if (seed) {
      t.seed = *seed;
      m.seed = *seed;
    }
  }
};

void load_config(const std::string& path, ModelConfig& m, TrainConfig& t) {
  if (!path.empty()) apply_config(KeyValueConfig::load(path), m, t);
}

// Run directories are never overwritten.
void create_run_dir(const fs::path& dir) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    throw Error(ErrorCode::kIo, "run directory " + dir.string() + " already exists and is not empty");
  }
  fs::create_directories(dir);
}

void write_new(const fs::path& path, std::string_view bytes) {
  if (fs::exists(path)) throw Error(ErrorCode::kIo, path.string() + " already exists");
  write_file(path, bytes);
}

fs::path sibling_vocab(const fs::path& checkpoint) { return checkpoint.parent_path() / kVocabFile; }

class Manifest {
 public:
  Manifest(const std::string& subcommand, const fs::path& run) {
    kv_.set("run.subcommand", subcommand);
    kv_.set("run.dir", run.string());
    kv_.set("run.tool_version", kVersion);
  }

  void input(const std::string& name, const fs::path& path) {
    kv_.set("input." + name, path.string());
    kv_.set("input." + name + ".fnv1a64", fingerprint(read_file(path)));
  }

  void set(const std::string& key, const std::string& value) { kv_.set(key, value); }

  void config(const ModelConfig& m, const TrainConfig& t, const std::string& prefix = "") {
    const auto values = to_key_values(m, t);
    for (const auto& [k, v] : values.entries()) kv_.set(prefix + k, v);
  }

  void write(const fs::path& run) const { write_new(run / kManifest, kv_.serialize()); }

 private:
  KeyValueConfig kv_;
};

void input_corpus(Manifest& manifest, const std::string& name, const fs::path& dir) {
  manifest.input(name + ".source", dir / kSourceFile);
  manifest.input(name + ".target", dir / kTargetFile);
}

StepObserver progress(int every) {
  return [every](const StepReport& r) {
    if (r.step % every == 0) {
      std::cerr << "step " << r.step << "\tloss " << format_double(r.loss) << "\tlr "
                << format_double(r.learning_rate) << '\n';
    }
  };
}

void report_selection(const TrainLog& log, const Checkpoint& ckpt) {
  std::cout << "selected " << log.selected_stage << " step " << ckpt.step << " dev_loss "
            << format_double(ckpt.dev_loss) << '\n';
}

// ---------------------------------------------------------------------------

int run_vocab_train(const std::string& src, const std::string& tgt, std::size_t size, const std::string& out) {
  const auto corpus = load_parallel(src, tgt, "es-xx");
  const auto vocab = train_vocab(corpus, size);
  vocab.save(out);
  std::cout << "pieces\t" << vocab.size() << "\nmerges\t" << vocab.merges().size() << "\nfingerprint\t"
            << vocab.fingerprint() << '\n';
  return 0;
}

int run_tokenize(const std::string& vocab_path, const std::string& in, const std::string& out, bool ids) {
  const auto vocab = SubwordVocabulary::load(vocab_path);
  std::vector<std::string> lines;
  for (const auto& s : load_lines(in)) {
    const auto t = encode(vocab, s);
    std::string line;
    for (std::size_t i = 0; i < t.ids.size(); ++i) {
      if (i) line += ' ';
      line += ids ? std::to_string(t.ids[i]) : t.pieces[i];
    }
    lines.push_back(std::move(line));
  }
  save_lines(out, lines);
  return 0;
}

int run_stats(const std::string& vocab_path, const std::string& src, const std::string& tgt) {
  const auto vocab = SubwordVocabulary::load(vocab_path);
  const auto s = tokenization_stats(load_parallel(src, tgt, "es-xx"), vocab);
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-8s %10s %10s %10s %10s\n", "N", "sent_src", "sent_tgt", "tok_src", "tok_tgt");
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "%-8zu %10.2f %10.2f %10.2f %10.2f\n", s.sentences, s.avg_sentence_length_source,
                s.avg_sentence_length_target, s.avg_token_length_source, s.avg_token_length_target);
  std::cout << buf;
  std::cout << "sentences\t" << s.sentences << "\navg_sentence_length_source\t"
            << format_double(s.avg_sentence_length_source) << "\navg_sentence_length_target\t"
            << format_double(s.avg_sentence_length_target) << "\navg_token_length_source\t"
            << format_double(s.avg_token_length_source) << "\navg_token_length_target\t"
            << format_double(s.avg_token_length_target) << '\n';
  return 0;
}

struct SplitArgs {
  std::string track = "one";
  std::string train_src, train_tgt, dev_src, dev_tgt, out;
  double fraction = kTrackOneFraction;
  std::uint64_t seed = 0;
};

int run_split(const SplitArgs& a) {
  const auto train = load_parallel(a.train_src, a.train_tgt, "es-xx");
  const auto dev = load_parallel(a.dev_src, a.dev_tgt, "es-xx");
  const fs::path out(a.out);
  if (a.track == "two") {
    make_track_two(train, dev);
    for (const auto& [dir, src, tgt] : {std::tuple{"train", a.train_src, a.train_tgt},
                                        std::tuple{"dev", a.dev_src, a.dev_tgt}}) {
      fs::create_directories(out / dir);
      write_file(out / dir / kSourceFile, read_file(src));
      write_file(out / dir / kTargetFile, read_file(tgt));
    }
  } else {
    const auto [t, d] = make_track_one(train, dev, a.fraction, a.seed);
    save_corpus_dir(t, out / "train");
    save_corpus_dir(d, out / "dev");
  }
  std::cout << "train\t" << (a.track == "two" ? train.size() : train.size() + track_one_moved_count(dev.size(), a.fraction))
            << "\ndev\t" << (a.track == "two" ? dev.size() : dev.size() - track_one_moved_count(dev.size(), a.fraction))
            << '\n';
  return 0;
}

struct TrainArgs {
  std::string vocab, train, dev, config, out;
  Overrides overrides;
};

int run_train(const TrainArgs& a) {
  const auto vocab = SubwordVocabulary::load(a.vocab);
  ModelConfig m;
  TrainConfig t;
  load_config(a.config, m, t);
  a.overrides.apply(m, t);
  m.vocab_size = static_cast<int>(vocab.size());
  m.validate();
  t.validate();
  const auto train_corpus = load_corpus_dir(a.train);
  const auto dev_corpus = load_corpus_dir(a.dev);

  const fs::path run(a.out);
  create_run_dir(run);
  Manifest manifest("train", run);
  manifest.input("vocab", a.vocab);
  input_corpus(manifest, "train", a.train);
  input_corpus(manifest, "dev", a.dev);
  manifest.set("run.vocab_size", std::to_string(m.vocab_size));
  manifest.config(m, t);
  manifest.write(run);
  write_new(run / kVocabFile, read_file(a.vocab));

  const auto result =
      train(TranslationModel<float>::init(m), train_corpus, dev_corpus, vocab, t, progress(t.validate_every));
  result.checkpoint.save(run / kBestCheckpoint);
  write_new(run / kTrainLog, result.log.to_tsv());
  report_selection(result.log, result.checkpoint);
  return 0;
}

// Fine-tuning keeps the parent architecture; only dropout and label
// smoothing may change.
ModelConfig child_model_config(const ModelConfig& parent, const ModelConfig& requested, const ModelConfig& defaults) {
  const auto differs = [&](auto ModelConfig::*field) {
    return requested.*field != defaults.*field && requested.*field != parent.*field;
  };
  if (differs(&ModelConfig::layers) || differs(&ModelConfig::heads) || differs(&ModelConfig::d_model) ||
      differs(&ModelConfig::d_ff) || differs(&ModelConfig::max_len)) {
    throw UsageError("the model architecture is fixed by the parent checkpoint");
  }
  ModelConfig out = parent;
  out.dropout = requested.dropout;
  out.label_smoothing = requested.label_smoothing;
  out.seed = requested.seed;
  return out;
}

struct FinetuneArgs {
  std::string parent, vocab, train, dev, config, out;
  Overrides overrides;
};

int run_finetune(const FinetuneArgs& a) {
  const fs::path vocab_path = a.vocab.empty() ? sibling_vocab(a.parent) : fs::path(a.vocab);
  const auto vocab = SubwordVocabulary::load(vocab_path);
  const auto parent = Checkpoint::load(a.parent);
  ModelConfig requested;
  TrainConfig t;
  load_config(a.config, requested, t);
  a.overrides.apply(requested, t);
  Checkpoint start = parent;
  start.config = child_model_config(parent.config, requested, ModelConfig{});
  t.validate();
  const auto train_corpus = load_corpus_dir(a.train);
  const auto dev_corpus = load_corpus_dir(a.dev);

  const fs::path run(a.out);
  create_run_dir(run);
  Manifest manifest("finetune", run);
  manifest.input("parent", a.parent);
  manifest.input("vocab", vocab_path);
  input_corpus(manifest, "train", a.train);
  input_corpus(manifest, "dev", a.dev);
  manifest.config(start.config, t);
  manifest.write(run);
  write_new(run / kVocabFile, read_file(vocab_path));

  const auto result = finetune(start, train_corpus, dev_corpus, vocab, t, progress(t.validate_every));
  result.checkpoint.save(run / kBestCheckpoint);
  write_new(run / kTrainLog, result.log.to_tsv());
  report_selection(result.log, result.checkpoint);
  return 0;
}

struct CurriculumArgs {
  std::string parent, vocab, stage1, stage2, config, out;
  int stage1_steps = 300;
  int stage1_validate = 20;
  Overrides overrides;
};

int run_curriculum(const CurriculumArgs& a) {
  const fs::path vocab_path = a.vocab.empty() ? sibling_vocab(a.parent) : fs::path(a.vocab);
  const auto vocab = SubwordVocabulary::load(vocab_path);
  const auto parent = Checkpoint::load(a.parent);
  ModelConfig requested;
  CurriculumConfig cc;
  load_config(a.config, requested, cc.stage2);
  a.overrides.apply(requested, cc.stage2);
  Checkpoint start = parent;
  start.config = child_model_config(parent.config, requested, ModelConfig{});
  cc.stage1 = cc.stage2;
  cc.stage1.max_steps = a.stage1_steps;
  cc.stage1.validate_every = a.stage1_validate;
  cc.validate();
  const fs::path s1(a.stage1), s2(a.stage2);
  cc.stage1_train = load_corpus_dir(s1 / "train");
  cc.stage1_dev = load_corpus_dir(s1 / "dev");
  cc.stage2_train = load_corpus_dir(s2 / "train");
  cc.stage2_dev = load_corpus_dir(s2 / "dev");

  const fs::path run(a.out);
  create_run_dir(run);
  Manifest manifest("curriculum", run);
  manifest.input("parent", a.parent);
  manifest.input("vocab", vocab_path);
  input_corpus(manifest, "stage1.train", s1 / "train");
  input_corpus(manifest, "stage1.dev", s1 / "dev");
  input_corpus(manifest, "stage2.train", s2 / "train");
  input_corpus(manifest, "stage2.dev", s2 / "dev");
  manifest.set("run.stage1_steps", std::to_string(a.stage1_steps));
  manifest.set("run.stage1_validate", std::to_string(a.stage1_validate));
  manifest.config(start.config, cc.stage2);
  manifest.write(run);
  write_new(run / kVocabFile, read_file(vocab_path));

  const auto result = curriculum_finetune(start, cc, vocab, progress(cc.stage1.validate_every));
  result.stage1.save(run / kStage1Checkpoint);
  result.checkpoint.save(run / kBestCheckpoint);
  write_new(run / kTrainLog, result.log.to_tsv());
  std::cout << "stage1 step " << result.stage1.step << " dev_loss " << format_double(result.stage1.dev_loss) << '\n';
  report_selection(result.log, result.checkpoint);
  return 0;
}

struct TranslateArgs {
  std::string ckpt, vocab, in, out;
  BeamConfig beam;
};

int run_translate(const TranslateArgs& a) {
  const fs::path vocab_path = a.vocab.empty() ? sibling_vocab(a.ckpt) : fs::path(a.vocab);
  const auto vocab = SubwordVocabulary::load(vocab_path);
  const auto ckpt = Checkpoint::load(a.ckpt);
  save_lines(a.out, translate_corpus(ckpt, load_lines(a.in), vocab, a.beam));
  return 0;
}

int run_evaluate(const std::string& ref, const std::string& hyp, const std::string& format) {
  const auto report = evaluate(load_lines(ref), load_lines(hyp));
  if (format != "tsv") std::cout << report.human();
  if (format != "human") std::cout << report.tsv();
  return 0;
}

int run_lengths(const std::string& gold, const std::string& pred) {
  const auto s = length_stats(load_lines(gold), load_lines(pred));
  std::cout << s.table() << s.tsv();
  return 0;
}

int run_variants(const std::string& in, const std::string& stem) {
  const auto r = variant_count(load_lines(in), stem);
  std::cout << r.table() << r.tsv();
  return 0;
}

int run_synth(std::uint64_t seed, const std::string& out) {
  save_transfer_fixture(make_transfer_fixture(seed), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mtlab: low-resource transfer-learning translation laboratory"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  std::function<int()> action;

  // vocab-train
  std::string vt_src, vt_tgt, vt_out;
  std::size_t vt_size = 1000;
  auto* vt = app.add_subcommand("vocab-train", "Train a subword vocabulary on both sides of a corpus");
  vt->add_option("--src", vt_src, "Source sentences, one per line")->required()->check(CLI::ExistingFile);
  vt->add_option("--tgt", vt_tgt, "Target sentences, one per line")->required()->check(CLI::ExistingFile);
  vt->add_option("--size", vt_size, "Vocabulary size including the four specials");
  vt->add_option("--out", vt_out, "Vocabulary file to write")->required();
  vt->callback([&] { action = [&] { return run_vocab_train(vt_src, vt_tgt, vt_size, vt_out); }; });

  // tokenize
  std::string tk_vocab, tk_in, tk_out;
  bool tk_ids = false;
  auto* tk = app.add_subcommand("tokenize", "Write each line as space-separated subword pieces");
  tk->add_option("--vocab", tk_vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  tk->add_option("--in", tk_in, "Input sentences")->required()->check(CLI::ExistingFile);
  tk->add_option("--out", tk_out, "Output file")->required();
  tk->add_flag("--ids", tk_ids, "Write token ids instead of pieces");
  tk->callback([&] { action = [&] { return run_tokenize(tk_vocab, tk_in, tk_out, tk_ids); }; });

  // stats
  std::string st_vocab, st_src, st_tgt;
  auto* st = app.add_subcommand("stats", "Token statistics (sentence length in tokens, chars per token)");
  st->add_option("--vocab", st_vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  st->add_option("--src", st_src, "Source sentences")->required()->check(CLI::ExistingFile);
  st->add_option("--tgt", st_tgt, "Target sentences")->required()->check(CLI::ExistingFile);
  st->callback([&] { action = [&] { return run_stats(st_vocab, st_src, st_tgt); }; });

  // split
  SplitArgs sp;
  auto* spc = app.add_subcommand("split", "Build Track One or Track Two train/dev directories");
  spc->add_option("--track", sp.track, "one: move a fraction of dev into train; two: copy unchanged")
      ->check(CLI::IsMember({"one", "two"}));
  spc->add_option("--train-src", sp.train_src, "Train source file")->required()->check(CLI::ExistingFile);
  spc->add_option("--train-tgt", sp.train_tgt, "Train target file")->required()->check(CLI::ExistingFile);
  spc->add_option("--dev-src", sp.dev_src, "Dev source file")->required()->check(CLI::ExistingFile);
  spc->add_option("--dev-tgt", sp.dev_tgt, "Dev target file")->required()->check(CLI::ExistingFile);
  spc->add_option("--fraction", sp.fraction, "Share of dev moved to train (Track One)")->check(CLI::Range(0.0, 1.0));
  spc->add_option("--seed", sp.seed, "Shuffle seed (Track One)");
  spc->add_option("--out", sp.out, "Output directory; gets train/ and dev/")->required();
  spc->callback([&] { action = [&] { return run_split(sp); }; });

  // train
  TrainArgs tr;
  auto* trc = app.add_subcommand("train", "Train a parent model from scratch");
  trc->add_option("--vocab", tr.vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  trc->add_option("--train", tr.train, "Training corpus directory (source.txt, target.txt)")
      ->required()
      ->check(CLI::ExistingDirectory);
  trc->add_option("--dev", tr.dev, "Dev corpus directory")->required()->check(CLI::ExistingDirectory);
  trc->add_option("--config", tr.config, "key = value config file; flags override it")->check(CLI::ExistingFile);
  trc->add_option("--out", tr.out, "New run directory")->required();
  tr.overrides.add_model_flags(trc);
  tr.overrides.add_train_flags(trc);
  trc->callback([&] { action = [&] { return run_train(tr); }; });

  // finetune
  FinetuneArgs ft;
  auto* ftc = app.add_subcommand("finetune", "Fine-tune a parent checkpoint on a child corpus");
  ftc->add_option("--parent", ft.parent, "Parent checkpoint")->required()->check(CLI::ExistingFile);
  ftc->add_option("--vocab", ft.vocab, "Vocabulary file (default: vocab.txt next to the parent)");
  ftc->add_option("--train", ft.train, "Child training corpus directory")->required()->check(CLI::ExistingDirectory);
  ftc->add_option("--dev", ft.dev, "Child dev corpus directory")->required()->check(CLI::ExistingDirectory);
  ftc->add_option("--config", ft.config, "key = value config file; flags override it")->check(CLI::ExistingFile);
  ftc->add_option("--out", ft.out, "New run directory")->required();
  ft.overrides.add_train_flags(ftc);
  ftc->callback([&] { action = [&] { return run_finetune(ft); }; });

  // curriculum
  CurriculumArgs cu;
  auto* cuc = app.add_subcommand("curriculum", "Two-stage fine-tuning: intermediate pair, then child pair");
  cuc->add_option("--parent", cu.parent, "Parent checkpoint")->required()->check(CLI::ExistingFile);
  cuc->add_option("--vocab", cu.vocab, "Vocabulary file (default: vocab.txt next to the parent)");
  cuc->add_option("--stage1", cu.stage1, "Intermediate split directory (train/, dev/)")
      ->required()
      ->check(CLI::ExistingDirectory);
  cuc->add_option("--stage2", cu.stage2, "Child split directory (train/, dev/)")
      ->required()
      ->check(CLI::ExistingDirectory);
  cuc->add_option("--stage1-steps", cu.stage1_steps, "Stage-1 optimizer updates");
  cuc->add_option("--stage1-validate", cu.stage1_validate, "Stage-1 validation interval");
  cuc->add_option("--config", cu.config, "Stage-2 key = value config; flags override it")->check(CLI::ExistingFile);
  cuc->add_option("--out", cu.out, "New run directory")->required();
  cu.overrides.add_train_flags(cuc);
  cuc->callback([&] { action = [&] { return run_curriculum(cu); }; });

  // translate
  TranslateArgs tl;
  auto* tlc = app.add_subcommand("translate", "Beam-search translation, one output line per input line");
  tlc->add_option("--ckpt", tl.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  tlc->add_option("--vocab", tl.vocab, "Vocabulary file (default: vocab.txt next to the checkpoint)");
  tlc->add_option("--in", tl.in, "Source sentences")->required()->check(CLI::ExistingFile);
  tlc->add_option("--out", tl.out, "Output file")->required();
  tlc->add_option("--beam", tl.beam.beam_size, "Beam size")->check(CLI::PositiveNumber);
  tlc->add_option("--max-len", tl.beam.max_len, "Maximum output tokens")->check(CLI::PositiveNumber);
  tlc->add_option("--alpha", tl.beam.length_norm_alpha, "Length normalisation exponent")->check(CLI::Range(0.0, 1.0));
  tlc->callback([&] { action = [&] { return run_translate(tl); }; });

  // evaluate
  std::string ev_ref, ev_hyp, ev_format = "both";
  auto* ev = app.add_subcommand("evaluate", "Corpus BLEU and chrF");
  ev->add_option("--ref", ev_ref, "Reference sentences")->required()->check(CLI::ExistingFile);
  ev->add_option("--hyp", ev_hyp, "Hypothesis sentences")->required()->check(CLI::ExistingFile);
  ev->add_option("--format", ev_format, "human, tsv or both")->check(CLI::IsMember({"human", "tsv", "both"}));
  ev->callback([&] { action = [&] { return run_evaluate(ev_ref, ev_hyp, ev_format); }; });

  // analyze
  auto* an = app.add_subcommand("analyze", "Length statistics and orthographic variant counts");
  an->require_subcommand(1);
  std::string al_gold, al_pred;
  auto* al = an->add_subcommand("lengths", "Words per sentence and characters per word, gold vs predicted");
  al->add_option("--gold", al_gold, "Reference sentences")->required()->check(CLI::ExistingFile);
  al->add_option("--pred", al_pred, "Predicted sentences")->required()->check(CLI::ExistingFile);
  al->callback([&] { action = [&] { return run_lengths(al_gold, al_pred); }; });
  std::string av_in, av_stem;
  auto* av = an->add_subcommand("variants", "Count words starting with a stem, byte for byte");
  av->add_option("--in", av_in, "Sentences")->required()->check(CLI::ExistingFile);
  av->add_option("--stem", av_stem, "Word prefix")->required();
  av->callback([&] { action = [&] { return run_variants(av_in, av_stem); }; });

  // synth
  std::uint64_t sy_seed = 1;
  std::string sy_out;
  auto* sy = app.add_subcommand("synth", "Write the synthetic parent/intermediate/child transfer fixture");
  sy->add_option("--seed", sy_seed, "Generator seed");
  sy->add_option("--out", sy_out, "Output directory")->required();
  sy->callback([&] { action = [&] { return run_synth(sy_seed, sy_out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "mtlab: " << e.what() << '\n';
    return 2;
  }

  configure_threads_from_env();
  try {
    return action();
  } catch (const UsageError& e) {
    std::cerr << "mtlab: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "mtlab: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "mtlab: " << e.what() << '\n';
    return 1;
  }
}
