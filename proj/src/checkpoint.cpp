#include "ordlin/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "ordlin/errors.hpp"

namespace ordlin {

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw DataError("checkpoint: missing header length");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Checkpoint& ck) {
  nlohmann::json header;
  header["format_version"] = kCheckpointFormat;
  header["config"] = ck.params.config();
  header["blocks"] = nlohmann::json::array();
  for (const ParamBlock& b : ck.params.blocks()) {
    header["blocks"].push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
  }
  header["vocab"] = ck.vocab;
  header["labels"] = ck.labels;
  header["extra"] = ck.extra;
  const std::string text = header.dump();
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  std::string body(ck.params.size() * 4, '\0');
  for (std::size_t i = 0; i < ck.params.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(ck.params.values()[i]));
    for (int j = 0; j < 4; ++j) body[4 * i + j] = static_cast<char>((bits >> (8 * j)) & 0xff);
  }
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw DataError("checkpoint: write failed");
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot open '" + path + "' for writing");
  save_checkpoint(out, ck);
}

Checkpoint load_checkpoint(std::istream& in) {
  const std::uint64_t len = get_u64(in);
  if (len > (std::uint64_t{1} << 32)) throw DataError("checkpoint: implausible header length");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw DataError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: bad header: ") + e.what());
  }
  if (header.value("format_version", 0) != kCheckpointFormat) {
    throw DataError("checkpoint: unsupported format version " + header.value("format_version", nlohmann::json()).dump());
  }
  Checkpoint ck;
  try {
    ck.params = ModelParameters(header.at("config").get<ScorerConfig>());
    ck.vocab = header.at("vocab").get<std::vector<std::string>>();
    ck.labels = header.at("labels").get<std::vector<std::string>>();
    ck.extra = header.value("extra", nlohmann::json::object());
    const auto& blocks = header.at("blocks");
    if (blocks.size() != ck.params.blocks().size()) throw DataError("checkpoint: block count does not match config");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const ParamBlock& b = ck.params.blocks()[i];
      if (blocks[i].at("name") != b.name || blocks[i].at("rows") != b.rows || blocks[i].at("cols") != b.cols) {
        throw DataError("checkpoint: block '" + b.name + "' has an unexpected shape");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: bad header: ") + e.what());
  } catch (const ContractViolation& e) {
    throw DataError(std::string("checkpoint: bad config: ") + e.what());
  }
  std::string body(ck.params.size() * 4, '\0');
  if (!in.read(body.data(), static_cast<std::streamsize>(body.size()))) throw DataError("checkpoint: truncated parameters");
  for (std::size_t i = 0; i < ck.params.size(); ++i) {
    std::uint32_t bits = 0;
    for (int j = 0; j < 4; ++j) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(body[4 * i + j])) << (8 * j);
    ck.params.values()[i] = std::bit_cast<float>(bits);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("checkpoint: trailing bytes after parameters");
  return ck;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open '" + path + "'");
  return load_checkpoint(in);
}

ModelParameters rounded_to_storage(const ModelParameters& params) {
  ModelParameters out = params;
  for (double& v : out.values()) v = static_cast<float>(v);
  return out;
}

}  // namespace ordlin
