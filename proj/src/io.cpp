#include "plodd/io.hpp"

#include <unistd.h>

#include <atomic>
#include <fstream>
#include <sstream>

#include "plodd/errors.hpp"
#include "plodd/spectral.hpp"

namespace plodd {

namespace {

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(std::string("sequence JSON lacks \"") + key + "\"");
  }
  return j.at(key);
}

double require_number(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_number()) throw ValidationError(std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

int require_int(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_number_integer()) {
    throw ValidationError(std::string("\"") + key + "\" must be an integer");
  }
  return v.get<int>();
}

}  // namespace

Json sequence_to_json(const PulseSequence& seq) {
  const SequenceFamily& fam = seq.family();
  Json j;
  j["family"] = std::string(family_name(fam.family));
  j["n"] = seq.size();
  j["instants"] = Json::array();
  for (double d : seq.instants()) j["instants"].push_back(d);
  Json params = Json::object();
  switch (fam.family) {
    case Family::Udd:
    case Family::Cpmg: params["n"] = fam.n; break;
    case Family::Cdd: params["level"] = fam.level; break;
    case Family::Plodd: params["alpha"] = fam.alpha; break;
    case Family::Custom: break;
  }
  j["parameters"] = params;
  return j;
}

PulseSequence sequence_from_json(const Json& j) {
  const Json& family_field = require(j, "family");
  if (!family_field.is_string()) throw ValidationError("\"family\" must be a string");
  const Family family = parse_family(family_field.get<std::string>());
  const int n = require_int(j, "n");
  const Json& list = require(j, "instants");
  if (!list.is_array()) throw ValidationError("\"instants\" must be an array");
  std::vector<double> instants;
  instants.reserve(list.size());
  for (std::size_t k = 0; k < list.size(); ++k) {
    if (!list[k].is_number()) {
      throw ValidationError("instant " + std::to_string(k) + " is not a number",
                            static_cast<int>(k));
    }
    instants.push_back(list[k].get<double>());
  }
  if (static_cast<int>(instants.size()) != n) {
    throw ValidationError("\"n\" is " + std::to_string(n) + " but " +
                          std::to_string(instants.size()) + " instants are listed");
  }
  SequenceFamily fam{family, n, 0, 0.0};
  const Json params = j.contains("parameters") ? j.at("parameters") : Json::object();
  if (!params.is_object()) throw ValidationError("\"parameters\" must be an object");
  if (family == Family::Cdd) fam.level = require_int(params, "level");
  if (family == Family::Plodd) fam.alpha = require_number(params, "alpha");
  return PulseSequence(std::move(instants), fam);
}

Json optimized_to_json(const OptimizedSequence& result) {
  Json j = sequence_to_json(result.sequence);
  j["alpha"] = result.provenance.alpha;
  j["prefactor"] = result.prefactor.value;
  j["kkt_residual"] = result.kkt.residual_norm;
  j["multipliers"] = result.kkt.multipliers;
  j["constraint_orders"] = result.kkt.constraint_orders;
  j["objective_scale"] = result.kkt.objective_scale;
  j["iterations"] = result.kkt.iterations;
  j["init"] = std::string(init_name(result.provenance.init));
  j["continuation"] = result.provenance.continuation;
  return j;
}

OptimizedSequence optimized_from_json(const Json& j) {
  OptimizedSequence out;
  out.sequence = sequence_from_json(j);
  const int n = out.sequence.size();
  const double alpha = require_number(j, "alpha");
  const SpectrumExponent ex(alpha);
  out.prefactor = spectral_prefactor(out.sequence, ex);
  try {
    out.kkt.multipliers = require(j, "multipliers").get<std::vector<double>>();
    out.kkt.constraint_orders = require(j, "constraint_orders").get<std::vector<int>>();
    out.provenance.continuation = j.value("continuation", std::vector<double>{});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed optimizer fields: ") + e.what());
  }
  if (out.kkt.multipliers.size() != out.kkt.constraint_orders.size()) {
    throw ValidationError("one multiplier per retained constraint expected");
  }
  out.kkt.residual_norm = require_number(j, "kkt_residual");
  out.kkt.objective_scale = require_number(j, "objective_scale");
  out.kkt.iterations = require_int(j, "iterations");
  const auto instants = out.sequence.instants();
  out.kkt.deltas.assign(instants.begin(), instants.begin() + n / 2);
  out.provenance.n = n;
  out.provenance.alpha = alpha;
  out.provenance.init = parse_init(j.value("init", std::string("auto")));
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return buffer.str();
}

void write_text_file_atomic(const std::filesystem::path& path,
                            const std::string& content) {
  static std::atomic<unsigned> counter{0};
  std::filesystem::path temp = path;
  temp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + temp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(temp, ignored);
      throw IoError("cannot write " + temp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(temp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(temp, ignored);
    throw IoError("cannot move " + temp.string() + " to " + path.string() + ": " + ec.message());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace plodd
