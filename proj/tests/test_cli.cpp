#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>

#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kExe = MTLAB_EXE;

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

CommandResult mtlab(const std::string& args, const ScratchDir& dir) { return run_command(kExe + " " + args, dir.path()); }

// Tiny copy task used by the training commands.
void write_toy_corpus(const fs::path& dir) {
  write_text(dir / "train" / "source.txt", "ab ba\nba ab\naab\nbba a\nab\nba\n");
  write_text(dir / "train" / "target.txt", "cd dc\ndc cd\nccd\nddc c\ncd\ndc\n");
  write_text(dir / "dev" / "source.txt", "ab\nba ba\n");
  write_text(dir / "dev" / "target.txt", "cd\ndc dc\n");
}

const std::string kTiny = " --d-model 8 --d-ff 16 --heads 2 --layers 1 --max-len 16 --batch-size 3 --warmup 2";

}  // namespace

TEST_CASE("every subcommand answers --help with exit 0 and shows defaults") {
  ScratchDir dir("cli-help");
  for (const std::string sub : {"vocab-train", "tokenize", "stats", "split", "train", "finetune", "curriculum",
                                "translate", "evaluate", "analyze lengths", "analyze variants", "synth"}) {
    CAPTURE(sub);
    const auto r = mtlab(sub + " --help", dir);
    CHECK(r.status == 0);
    CHECK(r.out.find("--") != std::string::npos);
  }
  const auto tr = mtlab("translate --help", dir);
  CHECK(tr.out.find("[6]") != std::string::npos);
  const auto vt = mtlab("vocab-train --help", dir);
  CHECK(vt.out.find("[1000]") != std::string::npos);
  CHECK(mtlab("--help", dir).status == 0);
}

TEST_CASE("usage errors exit 2, runtime errors exit 1") {
  ScratchDir dir("cli-exit");
  CHECK(mtlab("", dir).status == 2);
  CHECK(mtlab("no-such-command", dir).status == 2);
  CHECK(mtlab("evaluate --ref " + q(dir / "missing.txt") + " --hyp " + q(dir / "missing.txt"), dir).status == 2);
  CHECK(mtlab("evaluate --format xml --ref x --hyp y", dir).status == 2);

  write_text(dir / "ref.txt", "a b\nc d\n");
  write_text(dir / "hyp.txt", "a b\n");
  const auto r = mtlab("evaluate --ref " + q(dir / "ref.txt") + " --hyp " + q(dir / "hyp.txt"), dir);
  CHECK(r.status == 1);
  CHECK(r.err.rfind("mtlab: ", 0) == 0);
  CHECK(r.err.find("LengthMismatch") != std::string::npos);
}

TEST_CASE("evaluate reports identity scores") {
  ScratchDir dir("cli-eval");
  write_text(dir / "ref.txt", "ukhamarac jichha\nkunjamas\n");
  const auto r = mtlab("evaluate --format tsv --ref " + q(dir / "ref.txt") + " --hyp " + q(dir / "ref.txt"), dir);
  REQUIRE(r.status == 0);
  CHECK(r.out.rfind("BLEU\t100.0000\nchrF\t1.0000\n", 0) == 0);
  const auto h = mtlab("evaluate --format human --ref " + q(dir / "ref.txt") + " --hyp " + q(dir / "ref.txt"), dir);
  CHECK(h.out.rfind("BLEU = 100.000", 0) == 0);
  CHECK(h.out.find("\t") == std::string::npos);
}

TEST_CASE("vocab-train, tokenize and stats") {
  ScratchDir dir("cli-vocab");
  write_text(dir / "src.txt", "aa ab\nba\n");
  write_text(dir / "tgt.txt", "ab\nbb ab\n");
  const auto v = mtlab("vocab-train --src " + q(dir / "src.txt") + " --tgt " + q(dir / "tgt.txt") +
                           " --size 12 --out " + q(dir / "vocab.txt"),
                       dir);
  REQUIRE(v.status == 0);
  // No pair repeats after the first merge, so training stops below the requested size.
  CHECK(v.out.find("pieces\t10\nmerges\t1\n") != std::string::npos);

  REQUIRE(mtlab("tokenize --vocab " + q(dir / "vocab.txt") + " --in " + q(dir / "src.txt") + " --out " +
                    q(dir / "pieces.txt"),
                dir)
              .status == 0);
  const std::string pieces = slurp(dir / "pieces.txt");
  CHECK(std::count(pieces.begin(), pieces.end(), '\n') == 2);
  CHECK(pieces.find("\xE2\x96\x81") != std::string::npos);

  REQUIRE(mtlab("tokenize --ids --vocab " + q(dir / "vocab.txt") + " --in " + q(dir / "src.txt") + " --out " +
                    q(dir / "ids.txt"),
                dir)
              .status == 0);
  CHECK(slurp(dir / "ids.txt").find_first_not_of("0123456789 \n") == std::string::npos);

  const auto s = mtlab("stats --vocab " + q(dir / "vocab.txt") + " --src " + q(dir / "src.txt") + " --tgt " +
                           q(dir / "tgt.txt"),
                       dir);
  REQUIRE(s.status == 0);
  CHECK(s.out.find("sentences\t2\n") != std::string::npos);
  CHECK(s.out.find("avg_token_length_source\t") != std::string::npos);
}

TEST_CASE("split track two copies bytes, track one moves dev lines") {
  ScratchDir dir("cli-split");
  write_text(dir / "ts.txt", "uno dos\r\ntres  \n");
  write_text(dir / "tt.txt", "one two\r\nthree  \n");
  write_text(dir / "ds.txt", "a\nb\nc\nd\ne\nf\ng\nh\ni\nj\n");
  write_text(dir / "dt.txt", "A\nB\nC\nD\nE\nF\nG\nH\nI\nJ\n");
  const std::string files = " --train-src " + q(dir / "ts.txt") + " --train-tgt " + q(dir / "tt.txt") +
                            " --dev-src " + q(dir / "ds.txt") + " --dev-tgt " + q(dir / "dt.txt");
  REQUIRE(mtlab("split --track two" + files + " --out " + q(dir / "two"), dir).status == 0);
  CHECK(slurp(dir / "two/train/source.txt") == slurp(dir / "ts.txt"));
  CHECK(slurp(dir / "two/train/target.txt") == slurp(dir / "tt.txt"));
  CHECK(slurp(dir / "two/dev/source.txt") == slurp(dir / "ds.txt"));
  CHECK(slurp(dir / "two/dev/target.txt") == slurp(dir / "dt.txt"));

  const auto r = mtlab("split --track one --seed 3" + files + " --out " + q(dir / "one"), dir);
  REQUIRE(r.status == 0);
  CHECK(r.out == "train\t11\ndev\t1\n");
  const std::string dev = slurp(dir / "one/dev/source.txt");
  CHECK(std::count(dev.begin(), dev.end(), '\n') == 1);
}

TEST_CASE("training commands write a manifest, refuse to overwrite and are deterministic") {
  ScratchDir dir("cli-train");
  write_toy_corpus(dir / "data");
  REQUIRE(mtlab("vocab-train --src " + q(dir / "data/train/source.txt") + " --tgt " +
                    q(dir / "data/train/target.txt") + " --size 16 --out " + q(dir / "vocab.txt"),
                dir)
              .status == 0);
  const std::string train = "train --vocab " + q(dir / "vocab.txt") + " --train " + q(dir / "data/train") +
                            " --dev " + q(dir / "data/dev") + kTiny + " --max-steps 6 --validate-every 3 --out ";
  REQUIRE(mtlab(train + q(dir / "run1"), dir).status == 0);
  REQUIRE(mtlab(train + q(dir / "run2"), dir).status == 0);

  for (const char* f : {"manifest.txt", "vocab.txt", "best.ckpt", "trainlog.tsv"}) CHECK(fs::exists(dir / "run1" / f));
  CHECK(slurp(dir / "run1/best.ckpt") == slurp(dir / "run2/best.ckpt"));
  CHECK(slurp(dir / "run1/trainlog.tsv") == slurp(dir / "run2/trainlog.tsv"));
  const std::string manifest = slurp(dir / "run1/manifest.txt");
  CHECK(manifest.find("run.subcommand = train\n") != std::string::npos);
  CHECK(manifest.find("d_model = 8\n") != std::string::npos);
  CHECK(manifest.find("input.train.source.fnv1a64 = ") != std::string::npos);

  // The manifest is itself a valid config file.
  REQUIRE(mtlab("train --vocab " + q(dir / "vocab.txt") + " --train " + q(dir / "data/train") + " --dev " +
                    q(dir / "data/dev") + " --config " + q(dir / "run1/manifest.txt") + " --out " + q(dir / "run3"),
                dir)
              .status == 0);
  CHECK(slurp(dir / "run3/best.ckpt") == slurp(dir / "run1/best.ckpt"));

  const auto again = mtlab(train + q(dir / "run1"), dir);
  CHECK(again.status == 1);
  CHECK(again.err.find("already exists") != std::string::npos);

  const std::string finetune = "finetune --parent " + q(dir / "run1/best.ckpt") + " --train " +
                               q(dir / "data/train") + " --dev " + q(dir / "data/dev") +
                               " --max-steps 4 --validate-every 2 --batch-size 3 --warmup 2 --out ";
  REQUIRE(mtlab(finetune + q(dir / "child1"), dir).status == 0);
  REQUIRE(mtlab(finetune + q(dir / "child2"), dir).status == 0);
  CHECK(slurp(dir / "child1/best.ckpt") == slurp(dir / "child2/best.ckpt"));
  CHECK(slurp(dir / "child1/manifest.txt").find("input.parent.fnv1a64 = ") != std::string::npos);

  const std::string translate = "translate --ckpt " + q(dir / "child1/best.ckpt") + " --in " +
                                q(dir / "data/dev/source.txt") + " --beam 3 --max-len 8 --out ";
  REQUIRE(mtlab(translate + q(dir / "hyp1.txt"), dir).status == 0);
  REQUIRE(mtlab(translate + q(dir / "hyp2.txt"), dir).status == 0);
  const std::string hyp = slurp(dir / "hyp1.txt");
  CHECK(hyp == slurp(dir / "hyp2.txt"));
  CHECK(std::count(hyp.begin(), hyp.end(), '\n') == 2);

  write_toy_corpus(dir / "stage1");
  REQUIRE(mtlab("curriculum --parent " + q(dir / "run1/best.ckpt") + " --stage1 " + q(dir / "stage1") +
                    " --stage2 " + q(dir / "data") +
                    " --stage1-steps 4 --stage1-validate 2 --max-steps 4 --validate-every 2 --batch-size 3 --out " +
                    q(dir / "cur"),
                dir)
              .status == 0);
  CHECK(fs::exists(dir / "cur/stage1.ckpt"));
  CHECK(fs::exists(dir / "cur/best.ckpt"));
}

TEST_CASE("finetune cannot change the parent architecture") {
  ScratchDir dir("cli-arch");
  write_toy_corpus(dir / "data");
  REQUIRE(mtlab("vocab-train --src " + q(dir / "data/train/source.txt") + " --tgt " +
                    q(dir / "data/train/target.txt") + " --size 16 --out " + q(dir / "vocab.txt"),
                dir)
              .status == 0);
  REQUIRE(mtlab("train --vocab " + q(dir / "vocab.txt") + " --train " + q(dir / "data/train") + " --dev " +
                    q(dir / "data/dev") + kTiny + " --max-steps 2 --validate-every 1 --out " + q(dir / "p"),
                dir)
              .status == 0);
  write_text(dir / "arch.conf", "d_model = 32\n");
  const auto r = mtlab("finetune --parent " + q(dir / "p/best.ckpt") + " --train " + q(dir / "data/train") +
                           " --dev " + q(dir / "data/dev") + " --config " + q(dir / "arch.conf") + " --out " +
                           q(dir / "c"),
                       dir);
  CHECK(r.status == 2);
  CHECK(!fs::exists(dir / "c"));
}

TEST_CASE("analyze lengths and variants") {
  ScratchDir dir("cli-analyze");
  write_text(dir / "gold.txt", "ukhamarac jichha\nkunjamas\n");
  write_text(dir / "pred.txt", "ukhamarak\nkunjamas ukhamaraki\n");
  const auto l = mtlab("analyze lengths --gold " + q(dir / "gold.txt") + " --pred " + q(dir / "pred.txt"), dir);
  REQUIRE(l.status == 0);
  CHECK(l.out.find("Sent (Gold)") != std::string::npos);
  CHECK(l.out.find("avg_sent_len_gold\t1.500000\n") != std::string::npos);
  CHECK(l.out.find("avg_word_len_gold\t7.666667\n") != std::string::npos);
  CHECK(l.out.find("avg_word_len_pred\t9.000000\n") != std::string::npos);

  const auto v = mtlab("analyze variants --stem ukhamara --in " + q(dir / "pred.txt"), dir);
  REQUIRE(v.status == 0);
  CHECK(v.out.find("count\t2\n") != std::string::npos);
  CHECK(v.out.find("form:ukhamarak\t1\n") != std::string::npos);
  CHECK(v.out.find("form:ukhamaraki\t1\n") != std::string::npos);

  CHECK(mtlab("analyze", dir).status == 2);
}

TEST_CASE("synth is reproducible") {
  ScratchDir dir("cli-synth");
  REQUIRE(mtlab("synth --seed 4 --out " + q(dir / "a"), dir).status == 0);
  REQUIRE(mtlab("synth --seed 4 --out " + q(dir / "b"), dir).status == 0);
  for (const char* f : {"parent/train/source.txt", "child/test/target.txt"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  const std::string child = slurp(dir / "a/child/train/source.txt");
  CHECK(std::count(child.begin(), child.end(), '\n') == 64);
}
