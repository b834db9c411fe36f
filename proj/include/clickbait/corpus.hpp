#pragma once

// JSONL post corpus. One object per line, using the Webis Clickbait-17 field
// names:
//
//   id                 string (or integer), unique              required
//   postText           string, or array of strings joined by ' ' required
//   targetTitle        string                                    required
//   targetDescription  string                                    required
//   targetKeywords     array of strings, or comma-separated str  optional
//   postMedia          array of image ids; the first one is used optional
//   label              0 or 1                                    one of these
//   truthMean          number in [0, 1], >= 0.5 means clickbait  is needed for
//   truthClass         "clickbait" | "no-clickbait"              training
//
// When several label fields are present the first in the order above wins.

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace clickbait {

struct PostRecord {
  std::string id;
  std::string post_text;
  std::vector<std::string> post_title_tokens;
  std::string target_title;
  std::string target_description;
  std::vector<std::string> target_keywords;
  std::optional<std::string> image_id;
  std::optional<double> label;       // binarised, 0 or 1
  std::optional<double> truth_mean;  // graded annotation when supplied
};

/// Clickbait iff truthMean >= 0.5.
double binarize_truth_mean(double truth_mean);

enum class LabelPolicy { kRequired, kOptional };

struct CorpusIssue {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct ParsedCorpus {
  std::vector<PostRecord> records;   // in file order
  std::vector<CorpusIssue> malformed;  // lines that are not valid JSON objects
  std::vector<CorpusIssue> rejected;   // valid JSON missing or violating fields
  std::size_t blank_lines = 0;

  std::size_t issue_count() const { return malformed.size() + rejected.size(); }
};

ParsedCorpus parse_corpus(std::istream& in, LabelPolicy policy = LabelPolicy::kRequired);
/// Throws Error if the file cannot be opened.
ParsedCorpus parse_corpus_file(const std::string& path, LabelPolicy policy = LabelPolicy::kRequired);

/// Document-table keys for the post text and the target description.
std::string post_doc_id(const PostRecord& record);
std::string target_doc_id(const PostRecord& record);

}  // namespace clickbait
