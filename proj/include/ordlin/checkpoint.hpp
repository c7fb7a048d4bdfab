#pragma once

// Checkpoint file: uint64 little-endian header length, a JSON header
// (format version, scorer config, block shapes, vocabulary, labels), then
// each parameter block as little-endian float32 in header order.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ordlin/scorer.hpp"

namespace ordlin {

inline constexpr int kCheckpointFormat = 1;

struct Checkpoint {
  ModelParameters params;
  std::vector<std::string> vocab;   // form of each token id
  std::vector<std::string> labels;  // relation of each label id
  nlohmann::json extra = nlohmann::json::object();
};

void save_checkpoint(std::ostream& out, const Checkpoint& ck);
void save_checkpoint(const std::string& path, const Checkpoint& ck);
/// Throws DataError on a truncated or inconsistent file.
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

/// Parameters as stored: every value rounded through float32.
ModelParameters rounded_to_storage(const ModelParameters& params);

}  // namespace ordlin
