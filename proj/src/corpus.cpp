#include "clickbait/corpus.hpp"

#include <fstream>
#include <unordered_set>

#include "json.hpp"

#include "clickbait/embeddings.hpp"
#include "clickbait/errors.hpp"

namespace clickbait {

namespace {

using nlohmann::json;

// Raised while converting one object; becomes a rejected-record issue.
struct Reject {
  std::string message;
};

std::string required_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) throw Reject{std::string("missing field '") + key + "'"};
  if (!it->is_string()) throw Reject{std::string("field '") + key + "' must be a string"};
  return it->get<std::string>();
}

std::string id_of(const json& obj) {
  auto it = obj.find("id");
  if (it == obj.end() || it->is_null()) throw Reject{"missing field 'id'"};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw Reject{"field 'id' must be a string or integer"};
}

std::string post_text_of(const json& obj) {
  auto it = obj.find("postText");
  if (it == obj.end() || it->is_null()) throw Reject{"missing field 'postText'"};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_array()) {
    std::string joined;
    for (const json& part : *it) {
      if (!part.is_string()) throw Reject{"'postText' array must hold strings"};
      if (!joined.empty()) joined += ' ';
      joined += part.get<std::string>();
    }
    return joined;
  }
  throw Reject{"field 'postText' must be a string or array of strings"};
}

std::vector<std::string> keywords_of(const json& obj) {
  std::vector<std::string> out;
  auto it = obj.find("targetKeywords");
  if (it == obj.end() || it->is_null()) return out;
  if (it->is_array()) {
    for (const json& k : *it) {
      if (!k.is_string()) throw Reject{"'targetKeywords' array must hold strings"};
      out.push_back(k.get<std::string>());
    }
  } else if (it->is_string()) {
    const std::string s = it->get<std::string>();
    std::size_t start = 0;
    while (start <= s.size()) {
      std::size_t comma = s.find(',', start);
      if (comma == std::string::npos) comma = s.size();
      std::string part = s.substr(start, comma - start);
      const auto first = part.find_first_not_of(" \t");
      const auto last = part.find_last_not_of(" \t");
      if (first != std::string::npos) out.push_back(part.substr(first, last - first + 1));
      start = comma + 1;
    }
  } else {
    throw Reject{"field 'targetKeywords' must be a string or array"};
  }
  return out;
}

std::optional<std::string> image_of(const json& obj) {
  auto it = obj.find("postMedia");
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>().empty() ? std::nullopt : std::optional(it->get<std::string>());
  if (!it->is_array()) throw Reject{"field 'postMedia' must be an array of strings"};
  for (const json& m : *it) {
    if (!m.is_string()) throw Reject{"'postMedia' array must hold strings"};
  }
  if (it->empty()) return std::nullopt;
  return (*it)[0].get<std::string>();
}

void read_label(const json& obj, PostRecord& record) {
  if (auto it = obj.find("label"); it != obj.end() && !it->is_null()) {
    if (!it->is_number()) throw Reject{"field 'label' must be 0 or 1"};
    const double v = it->get<double>();
    if (v != 0.0 && v != 1.0) throw Reject{"field 'label' must be 0 or 1"};
    record.label = v;
  }
  if (auto it = obj.find("truthMean"); it != obj.end() && !it->is_null()) {
    if (!it->is_number()) throw Reject{"field 'truthMean' must be a number"};
    const double v = it->get<double>();
    if (!(v >= 0.0 && v <= 1.0)) throw Reject{"field 'truthMean' must lie in [0, 1]"};
    record.truth_mean = v;
    if (!record.label) record.label = binarize_truth_mean(v);
  }
  if (auto it = obj.find("truthClass"); it != obj.end() && !it->is_null() && !record.label) {
    const std::string cls = it->is_string() ? it->get<std::string>() : "";
    if (cls == "clickbait") {
      record.label = 1.0;
    } else if (cls == "no-clickbait") {
      record.label = 0.0;
    } else {
      throw Reject{"field 'truthClass' must be \"clickbait\" or \"no-clickbait\""};
    }
  }
}

}  // namespace

double binarize_truth_mean(double truth_mean) { return truth_mean >= 0.5 ? 1.0 : 0.0; }

ParsedCorpus parse_corpus(std::istream& in, LabelPolicy policy) {
  ParsedCorpus out;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      ++out.blank_lines;
      continue;
    }
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      out.malformed.push_back({number, obj.is_discarded() ? "malformed JSON" : "line is not a JSON object"});
      continue;
    }
    try {
      PostRecord r;
      r.id = id_of(obj);
      r.post_text = post_text_of(obj);
      r.post_title_tokens = tokenize(r.post_text);
      r.target_title = required_string(obj, "targetTitle");
      r.target_description = required_string(obj, "targetDescription");
      r.target_keywords = keywords_of(obj);
      r.image_id = image_of(obj);
      read_label(obj, r);
      if (policy == LabelPolicy::kRequired && !r.label) throw Reject{"missing label (label, truthMean or truthClass)"};
      if (!ids.insert(r.id).second) throw Reject{"duplicate id '" + r.id + "'"};
      out.records.push_back(std::move(r));
    } catch (const Reject& e) {
      out.rejected.push_back({number, e.message});
    }
  }
  return out;
}

ParsedCorpus parse_corpus_file(const std::string& path, LabelPolicy policy) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus '" + path + "'");
  return parse_corpus(in, policy);
}

std::string post_doc_id(const PostRecord& record) { return record.id + "#post"; }
std::string target_doc_id(const PostRecord& record) { return record.id + "#desc"; }

}  // namespace clickbait
