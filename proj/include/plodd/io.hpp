#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "plodd/optimizer.hpp"
#include "plodd/sequence.hpp"

namespace plodd {

using Json = nlohmann::ordered_json;

/// {"family", "n", "instants", "parameters"}. Instants are written with
/// round-trip precision so a file evaluates bit-identically to the
/// in-memory sequence.
Json sequence_to_json(const PulseSequence& seq);

/// Inverse of sequence_to_json; throws ValidationError on malformed input.
PulseSequence sequence_from_json(const Json& j);

/// Sequence JSON plus {"alpha", "prefactor", "kkt_residual", "multipliers"}
/// and the retained constraint orders, iteration count and initialization.
Json optimized_to_json(const OptimizedSequence& result);

/// Reads the augmented form back. The prefactor is recomputed from the
/// instants, never taken from the file.
OptimizedSequence optimized_from_json(const Json& j);

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_text_file_atomic(const std::filesystem::path& path,
                            const std::string& content);

Json read_json_file(const std::filesystem::path& path);

}  // namespace plodd
