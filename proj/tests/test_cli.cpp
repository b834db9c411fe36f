#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"

#include "clickbait/corpus.hpp"
#include "clickbait/vector_files.hpp"
#include "support.hpp"

namespace {

struct RunResult {
  int status = -1;
  std::string out;
};

// stdout only; stderr goes to the given file.
RunResult run(const std::string& args, const std::string& err_file = "/dev/null") {
  const std::string cmd = std::string(CLICKBAIT_CLI_PATH) + " " + args + " 2>" + err_file;
  RunResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tables() {
  const std::string f = testing::fixture("overfit64/");
  return "--corpus " + f + "corpus.jsonl --word-emb " + f + "words.emb --doc-emb " + f + "docs.emb --image-bank " + f +
         "images.ftb";
}

// Trains once for every test in this file.
struct Trained {
  testing::TempDir dir{"cli"};
  std::string ckpt = dir.file("model.ckpt");
  RunResult result = run("train " + tables() + " --out " + ckpt + " --epochs 25 --patience 0", dir.file("train.log"));
};

const Trained& trained() {
  static const Trained t;
  return t;
}

}  // namespace

TEST_CASE("train writes a checkpoint, a trace and a log") {
  const Trained& t = trained();
  REQUIRE(t.result.status == 0);
  CHECK(t.result.out.find("checkpoint written") != std::string::npos);
  const std::string log = slurp(t.dir.file("train.log"));
  CHECK(log.find("epoch   0") != std::string::npos);
  CHECK(log.find("4 image id(s) absent") != std::string::npos);

  const auto trace = nlohmann::json::parse(slurp(t.ckpt + ".trace.json"));
  CHECK(trace.size() == 25);
  CHECK(trace[0].contains("val_f1"));
}

TEST_CASE("evaluate, predict and compatibility checks") {
  const Trained& t = trained();
  REQUIRE(t.result.status == 0);
  const std::string& ckpt = t.ckpt;
  testing::TempDir dir("cli_out");

  SUBCASE("evaluate") {
    const RunResult eval = run("evaluate " + tables() + " --checkpoint " + ckpt + " --out " + dir.file("r.json"));
    REQUIRE(eval.status == 0);
    CHECK(eval.out.find("f1         1.000000") != std::string::npos);
    const auto report = nlohmann::json::parse(slurp(dir.file("r.json")));
    CHECK(report.at("counts").at("tp") == 32);
    CHECK(report.at("counts").at("tn") == 32);
    CHECK(report.at("f1").get<double>() == 1.0);
  }

  SUBCASE("predict") {
    const RunResult pred = run("predict " + tables() + " --checkpoint " + ckpt);
    REQUIRE(pred.status == 0);
    const clickbait::ParsedCorpus corpus = clickbait::parse_corpus_file(testing::fixture("overfit64/corpus.jsonl"));
    std::istringstream lines(pred.out);
    std::string line;
    std::size_t i = 0;
    while (std::getline(lines, line)) {
      REQUIRE(i < corpus.records.size());
      const auto tab = line.find('\t');
      REQUIRE(tab != std::string::npos);
      CHECK(line.substr(0, tab) == corpus.records[i].id);
      const std::string prob = line.substr(tab + 1);
      CHECK(prob.size() == 11);  // d.ddddddddd
      const double p = std::stod(prob);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      CHECK((p >= 0.5) == (corpus.records[i].label == 1.0));
      ++i;
    }
    CHECK(i == 64);

    const RunResult to_file = run("predict " + tables() + " --checkpoint " + ckpt + " --out " + dir.file("p.tsv"));
    CHECK(to_file.status == 0);
    CHECK(slurp(dir.file("p.tsv")) == pred.out);
  }

  SUBCASE("dimension mismatch against the checkpoint") {
    clickbait::EmbeddingTable small(5);
    small.insert("you", {1, 2, 3, 4, 5});
    clickbait::write_embedding_file(dir.file("small.emb"), small);
    const std::string f = testing::fixture("overfit64/");
    const RunResult bad = run("predict --corpus " + f + "corpus.jsonl --word-emb " + dir.file("small.emb") +
                                  " --checkpoint " + ckpt,
                              dir.file("err.log"));
    CHECK(bad.status == 2);
    CHECK(slurp(dir.file("err.log")).find("dim") != std::string::npos);
  }
}

TEST_CASE("gradcheck command") {
  const RunResult ok = run("gradcheck");
  CHECK(ok.status == 0);
  CHECK(ok.out.find("gradcheck passed") != std::string::npos);
  CHECK(ok.out.find("end_to_end") != std::string::npos);

  const RunResult broken = run("gradcheck --inject-fault sigmoid-sign");
  CHECK(broken.status == 1);
  CHECK(broken.out.find("FAIL sigmoid") != std::string::npos);
}

TEST_CASE("usage errors") {
  testing::TempDir dir("cli_err");
  const RunResult missing = run("evaluate " + tables() + " --checkpoint /nonexistent/model.ckpt", dir.file("e1"));
  CHECK(missing.status == 2);
  CHECK(slurp(dir.file("e1")).find("error:") != std::string::npos);

  CHECK(run("").status != 0);
  CHECK(run("train --corpus x").status != 0);
  CHECK(run("frobnicate").status != 0);
  CHECK(run("--help").status == 0);

  std::ofstream(dir.file("bad.ckpt")) << "CKP1 this is not a checkpoint";
  const RunResult corrupt = run("predict " + tables() + " --checkpoint " + dir.file("bad.ckpt"), dir.file("e2"));
  CHECK(corrupt.status == 2);
}
