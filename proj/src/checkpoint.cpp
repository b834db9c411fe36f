#include "clickbait/checkpoint.hpp"

#include <cmath>

#include <zlib.h>

#include "binary_io.hpp"
#include "clickbait/errors.hpp"
#include "json.hpp"

namespace clickbait {

namespace {

using json = nlohmann::ordered_json;

std::uint32_t crc_of(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

// Compares the byte count implied by the declared parameter shapes with the
// actual size. A header too damaged to read is left to the checksum.
void check_declared_length(const json& header, std::size_t payload_start, std::size_t actual) {
  std::vector<std::uint64_t> ends;
  std::uint64_t end = payload_start;
  try {
    for (const json& p : header.at("params")) {
      std::uint64_t n = 1;
      for (const json& d : p.at("shape")) n *= d.get<std::uint64_t>();
      end += 8 * n;
      ends.push_back(end);
    }
  } catch (const nlohmann::json::exception&) {
    return;
  }
  const std::uint64_t expected = end + 4;
  if (actual < expected) {
    long long entry = static_cast<long long>(ends.size());
    for (std::size_t k = 0; k < ends.size(); ++k) {
      if (ends[k] > actual) {
        entry = static_cast<long long>(k);
        break;
      }
    }
    throw TruncatedError("checkpoint truncated: " + std::to_string(actual) + " of " + std::to_string(expected) +
                             " bytes (parameter " + std::to_string(entry) + ")",
                         entry);
  }
  if (actual > expected) {
    throw LengthMismatchError("checkpoint has " + std::to_string(actual - expected) + " bytes past its checksum");
  }
}

json model_to_json(const ModelConfig& m) {
  return {{"word_dim", m.word_dim},
          {"doc_dim", m.doc_dim},
          {"image_dim", m.image_dim},
          {"char_dim", m.char_cnn.char_dim},
          {"kernel_width", m.char_cnn.kernel_width},
          {"char_channels", m.char_cnn.channels},
          {"char_output_channels", m.char_cnn.output_channels},
          {"hidden", m.hidden},
          {"attention", m.attention},
          {"siamese_hidden", m.siamese_hidden},
          {"siamese_out", m.siamese_out},
          {"max_title_length", m.max_title_length}};
}

ModelConfig model_from_json(const json& j) {
  ModelConfig m;
  m.word_dim = j.at("word_dim");
  m.doc_dim = j.at("doc_dim");
  m.image_dim = j.at("image_dim");
  m.char_cnn.char_dim = j.at("char_dim");
  m.char_cnn.kernel_width = j.at("kernel_width");
  m.char_cnn.channels = j.at("char_channels");
  m.char_cnn.output_channels = j.at("char_output_channels");
  m.hidden = j.at("hidden");
  m.attention = j.at("attention");
  m.siamese_hidden = j.at("siamese_hidden");
  m.siamese_out = j.at("siamese_out");
  m.max_title_length = j.at("max_title_length");
  return m;
}

json train_to_json(const TrainConfig& t) {
  json j = {{"batch_size", t.batch_size},
            {"seed", t.seed},
            {"max_epochs", t.max_epochs},
            {"split_train", t.split.train},
            {"split_validation", t.split.validation},
            {"threshold", t.threshold},
            {"rho", t.adadelta.rho},
            {"epsilon", t.adadelta.epsilon},
            {"patience", t.patience}};
  j["max_title_length_override"] = t.max_title_length ? json(*t.max_title_length) : json(nullptr);
  return j;
}

TrainConfig train_from_json(const json& j, const ModelConfig& model) {
  TrainConfig t;
  t.batch_size = j.at("batch_size");
  t.seed = j.at("seed");
  t.max_epochs = j.at("max_epochs");
  t.split.train = j.at("split_train");
  t.split.validation = j.at("split_validation");
  t.threshold = j.at("threshold");
  t.adadelta.rho = j.at("rho");
  t.adadelta.epsilon = j.at("epsilon");
  t.patience = j.at("patience");
  if (!j.at("max_title_length_override").is_null()) t.max_title_length = j.at("max_title_length_override");
  t.model = model;
  return t;
}

}  // namespace

std::string encode_checkpoint(const ModelParams& params, const TrainConfig& train) {
  const std::vector<NamedTensor> tensors = params.parameters();
  json header;
  header["model"] = model_to_json(params.config);
  header["train"] = train_to_json(train);
  json vocab = json::array();
  for (char32_t c : params.char_cnn.vocab.code_points()) vocab.push_back(static_cast<std::uint32_t>(c));
  header["char_vocab"] = vocab;
  json list = json::array();
  for (const NamedTensor& t : tensors) {
    for (double v : t.tensor.data()) {
      if (!std::isfinite(v)) throw InvalidArgument("checkpoint: parameter '" + t.name + "' is not finite");
    }
    list.push_back({{"name", t.name}, {"shape", t.tensor.shape()}});
  }
  header["params"] = list;
  const std::string header_text = header.dump();

  detail::ByteWriter w;
  w.raw(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u64(header_text.size());
  w.raw(header_text);
  for (const NamedTensor& t : tensors)
    for (double v : t.tensor.data()) w.f64(v);
  std::string bytes = w.take();
  detail::ByteWriter tail;
  tail.u32(crc_of(bytes));
  bytes += tail.bytes();
  return bytes;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < kCheckpointMagic.size() || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
    throw BadMagicError("not a checkpoint (expected magic 'CKP1')");
  }
  detail::ByteReader r(bytes);
  r.skip(kCheckpointMagic.size());
  const std::uint32_t version = r.u32(-1);
  if (version != kCheckpointVersion) {
    throw VersionMismatchError("checkpoint format version " + std::to_string(version) + ", this build reads " +
                               std::to_string(kCheckpointVersion));
  }
  const std::uint64_t header_size = r.u64(-1);
  if (header_size > r.remaining()) throw TruncatedError("checkpoint header truncated", -1);
  const json header = json::parse(r.raw(header_size, -1), nullptr, false);
  const std::size_t payload_start = r.position();
  if (!header.is_discarded()) check_declared_length(header, payload_start, bytes.size());

  if (bytes.size() < payload_start + 4) throw TruncatedError("checkpoint truncated before checksum", -1);
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  detail::ByteReader tail(bytes.substr(bytes.size() - 4));
  if (crc_of(body) != tail.u32(-1)) throw ChecksumError("checkpoint checksum mismatch; file is corrupted");
  if (header.is_discarded()) throw FormatError("checkpoint header is not valid JSON");

  detail::ByteReader payload(body);
  payload.skip(payload_start);

  try {
    Checkpoint out;
    const ModelConfig model = model_from_json(header.at("model"));
    out.train = train_from_json(header.at("train"), model);
    std::vector<char32_t> code_points;
    for (const json& c : header.at("char_vocab")) code_points.push_back(static_cast<char32_t>(c.get<std::uint32_t>()));
    out.params = ModelParams::initialize(model, CharVocabulary::from_code_points(std::move(code_points)), 0);

    std::vector<NamedTensor> tensors = out.params.parameters();
    const json& list = header.at("params");
    if (list.size() != tensors.size()) {
      throw FormatError("checkpoint lists " + std::to_string(list.size()) + " parameters, model has " +
                        std::to_string(tensors.size()));
    }
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      const std::string name = list[k].at("name");
      const Shape shape = list[k].at("shape").get<Shape>();
      if (name != tensors[k].name || shape != tensors[k].tensor.shape()) {
        throw FormatError("checkpoint parameter " + std::to_string(k) + " is '" + name + "' " + to_string(shape) +
                          ", expected '" + tensors[k].name + "' " + to_string(tensors[k].tensor.shape()));
      }
      for (double& v : tensors[k].tensor.mutable_data()) v = payload.f64(static_cast<long long>(k));
    }
    if (!payload.at_end()) {
      throw LengthMismatchError("checkpoint has " + std::to_string(payload.remaining()) + " unexpected bytes");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const ModelParams& params, const TrainConfig& train) {
  write_file_bytes(path, encode_checkpoint(params, train));
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(read_file_bytes(path)); }

}  // namespace clickbait
