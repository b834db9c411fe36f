#include "clickbait/cli.hpp"

#include <cstdio>
#include <fstream>
#include <optional>

#include "CLI11.hpp"

#include "clickbait/checkpoint.hpp"
#include "clickbait/errors.hpp"
#include "clickbait/gradcheck.hpp"
#include "clickbait/metrics.hpp"
#include "clickbait/training.hpp"

namespace clickbait {

namespace {

struct TableOptions {
  std::string corpus;
  std::string word_emb;
  std::string doc_emb;
  std::string image_bank;
};

// Tables named on the command line, kept alive for the Resources view.
struct LoadedTables {
  EmbeddingTable words;
  std::optional<EmbeddingTable> docs;
  std::optional<FeatureBank> images;

  Resources view() const {
    Resources r;
    r.words = &words;
    r.docs = docs ? &*docs : nullptr;
    r.images = images ? &*images : nullptr;
    return r;
  }
};

void add_table_options(CLI::App* cmd, TableOptions& opts) {
  cmd->add_option("--corpus", opts.corpus, "JSONL corpus")->required();
  cmd->add_option("--word-emb", opts.word_emb, "EMB1 word vectors")->required();
  cmd->add_option("--doc-emb", opts.doc_emb, "EMB1 document vectors (default: mean of word vectors)");
  cmd->add_option("--image-bank", opts.image_bank, "FTB1 image features (default: no images)");
}

LoadedTables load_tables(const TableOptions& opts) {
  LoadedTables t{read_embedding_file(opts.word_emb), std::nullopt, std::nullopt};
  if (!opts.doc_emb.empty()) t.docs = read_embedding_file(opts.doc_emb);
  if (!opts.image_bank.empty()) t.images = read_feature_bank(opts.image_bank);
  return t;
}

ParsedCorpus load_corpus(const std::string& path, LabelPolicy policy, std::ostream& err) {
  ParsedCorpus corpus = parse_corpus_file(path, policy);
  for (const auto& issue : corpus.malformed) err << "warning: " << path << ":" << issue.line << ": " << issue.message << "\n";
  for (const auto& issue : corpus.rejected) err << "warning: " << path << ":" << issue.line << ": " << issue.message << "\n";
  if (corpus.issue_count() > 0) err << "warning: skipped " << corpus.issue_count() << " corpus line(s)\n";
  if (corpus.records.empty()) throw InvalidArgument("corpus '" + path + "' has no usable records");
  return corpus;
}

void report_missing_images(const ParsedCorpus& corpus, const LoadedTables& tables, std::ostream& err) {
  const auto missing = missing_image_ids(corpus.records, tables.images ? &*tables.images : nullptr);
  if (!missing.empty() && tables.images) {
    err << "warning: " << missing.size() << " image id(s) absent from the feature bank, treated as missing (first: '"
        << missing.front() << "')\n";
  }
}

void check_compatible(const ModelConfig& model, const LoadedTables& tables) {
  const Resources r = tables.view();
  if (r.words->dim() != model.word_dim) {
    throw DimensionError("word vectors have dim " + std::to_string(r.words->dim()) + ", checkpoint expects " +
                         std::to_string(model.word_dim));
  }
  if (r.doc_dim() != model.doc_dim) {
    throw DimensionError("document vectors have dim " + std::to_string(r.doc_dim()) + ", checkpoint expects " +
                         std::to_string(model.doc_dim));
  }
  if (tables.images && tables.images->dim() != model.image_dim) {
    throw DimensionError("image features have dim " + std::to_string(tables.images->dim()) + ", checkpoint expects " +
                         std::to_string(model.image_dim));
  }
}

std::string format_probability(double p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", p);
  return buf;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hybrid BiLSTM-attention / Siamese clickbait classifier", "clickbait"};
  app.require_subcommand(1);

  // train
  TableOptions train_tables;
  TrainConfig train_cfg;
  std::string train_out, trace_out;
  std::size_t title_len = 0;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint plus a trace");
  add_table_options(train_cmd, train_tables);
  train_cmd->add_option("--out", train_out, "checkpoint path")->required();
  train_cmd->add_option("--trace", trace_out, "training trace JSON (default: <out>.trace.json)");
  train_cmd->add_option("--seed", train_cfg.seed, "random seed")->capture_default_str();
  train_cmd->add_option("--batch-size", train_cfg.batch_size, "records per batch")->capture_default_str();
  train_cmd->add_option("--epochs", train_cfg.max_epochs, "maximum epochs")->capture_default_str();
  train_cmd->add_option("--threshold", train_cfg.threshold, "clickbait threshold")->capture_default_str();
  train_cmd->add_option("--patience", train_cfg.patience, "early-stopping patience, 0 disables")
      ->capture_default_str();
  train_cmd->add_option("--max-title-length", title_len, "override the title length cap K");

  // evaluate / predict
  TableOptions eval_tables, predict_tables;
  std::string eval_checkpoint, eval_out, predict_checkpoint, predict_out;
  std::optional<double> eval_threshold;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Score a labelled corpus with a checkpoint");
  add_table_options(eval_cmd, eval_tables);
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint path")->required();
  eval_cmd->add_option("--threshold", eval_threshold, "clickbait threshold (default: the checkpoint's)");
  eval_cmd->add_option("--out", eval_out, "also write the JSON report here");

  CLI::App* predict_cmd = app.add_subcommand("predict", "Write id<TAB>probability per record");
  add_table_options(predict_cmd, predict_tables);
  predict_cmd->add_option("--checkpoint", predict_checkpoint, "checkpoint path")->required();
  predict_cmd->add_option("--out", predict_out, "output file (default: stdout)");

  // gradcheck
  std::uint64_t gradcheck_seed = 7;
  std::string fault;
  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable op");
  grad_cmd->add_option("--seed", gradcheck_seed, "random seed")->capture_default_str();
  grad_cmd->add_option("--inject-fault", fault)->group("");

  std::vector<std::string> argv_storage{"clickbait"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) {
      if (title_len > 0) train_cfg.max_title_length = title_len;
      if (trace_out.empty()) trace_out = train_out + ".trace.json";
      LoadedTables tables = load_tables(train_tables);
      ParsedCorpus corpus = load_corpus(train_tables.corpus, LabelPolicy::kRequired, err);
      report_missing_images(corpus, tables, err);
      TrainResult result = train(train_cfg, corpus.records, tables.view(), [&err](const EpochStats& s) {
        char line[160];
        std::snprintf(line, sizeof line, "epoch %3zu  loss %.6f  train_acc %.4f  val_f1 %.4f  val_acc %.4f\n", s.epoch,
                      s.train_loss, s.train_accuracy, s.val_f1, s.val_accuracy);
        err << line;
      });
      save_checkpoint(train_out, result.params, train_cfg);
      write_file_bytes(trace_out, trace_to_json(result.trace));
      out << "best epoch " << result.best_epoch << " (val f1 " << result.trace[result.best_epoch].val_f1
          << "), checkpoint written to " << train_out << "\n";
      return 0;
    }

    if (*eval_cmd || *predict_cmd) {
      const bool evaluating = static_cast<bool>(*eval_cmd);
      const TableOptions& opts = evaluating ? eval_tables : predict_tables;
      Checkpoint ckpt = load_checkpoint(evaluating ? eval_checkpoint : predict_checkpoint);
      LoadedTables tables = load_tables(opts);
      check_compatible(ckpt.params.config, tables);
      ParsedCorpus corpus =
          load_corpus(opts.corpus, evaluating ? LabelPolicy::kRequired : LabelPolicy::kOptional, err);
      report_missing_images(corpus, tables, err);
      const std::vector<EncodedRecord> records = encode_records(corpus.records, tables.view());
      const std::vector<double> probs = predict(ckpt.params, tables.words, records);

      if (evaluating) {
        std::vector<double> labels;
        for (const auto& r : records) labels.push_back(r.label);
        const MetricsReport report = compute_metrics(probs, labels, eval_threshold.value_or(ckpt.train.threshold));
        for (const auto& w : report.warnings) err << "warning: " << w << "\n";
        out << report_to_text(report) << report_to_json(report) << "\n";
        if (!eval_out.empty()) write_file_bytes(eval_out, report_to_json(report) + "\n");
      } else {
        std::string text;
        for (std::size_t i = 0; i < records.size(); ++i) text += records[i].id + "\t" + format_probability(probs[i]) + "\n";
        if (predict_out.empty()) {
          out << text;
        } else {
          write_file_bytes(predict_out, text);
        }
      }
      return 0;
    }

    if (*grad_cmd) {
      if (fault == "sigmoid-sign") {
        debug::set_fault(debug::Fault::kSigmoidGradSign);
      } else if (!fault.empty()) {
        throw InvalidArgument("unknown fault '" + fault + "'");
      }
      const auto outcomes = gradcheck::run_suite(gradcheck_seed);
      debug::set_fault(debug::Fault::kNone);
      bool ok = true;
      for (const auto& o : outcomes) {
        char line[200];
        std::snprintf(line, sizeof line, "%-4s %-22s instances %3zu  coords %6zu  max rel err %.3e (< %.0e)\n",
                      o.passed() ? "ok" : "FAIL", o.group.c_str(), o.instances, o.coordinates, o.max_rel_error,
                      o.tolerance);
        out << line;
        ok = ok && o.passed();
      }
      out << (ok ? "gradcheck passed\n" : "gradcheck FAILED\n");
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    debug::set_fault(debug::Fault::kNone);
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace clickbait
