#include "epa/run_config.hpp"

#include <nlohmann/json.hpp>

#include "epa/error.hpp"
#include "epa/io.hpp"

namespace epa {
namespace {

using json = nlohmann::json;

std::size_t positive(const json& v, const char* key) {
  if (!v.is_number_integer() || v.get<std::int64_t>() <= 0)
    fail(ErrorCode::InvalidArgument, std::string("config key '") + key + "' must be a positive integer");
  return v.get<std::size_t>();
}

}  // namespace

void RunConfig::validate() const {
  auto need = [](std::size_t v, const char* name) {
    if (v == 0) fail(ErrorCode::InvalidArgument, std::string(name) + " must be positive");
  };
  need(sample, "sample");
  need(k, "k");
  need(bins, "bins");
  need(per_bin, "per_bin");
  need(probe_depth, "probe_depth");
  if (spearman_top < 2) fail(ErrorCode::InvalidArgument, "spearman_top must be at least 2");
  if (norms.empty()) fail(ErrorCode::InvalidArgument, "at least one norm is required");
  if (heads && *heads == 0) fail(ErrorCode::InvalidArgument, "heads must be positive");
}

std::vector<Norm> parse_norm_list(std::string_view text) {
  std::vector<Norm> norms;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    auto item = text.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      const Norm n = parse_norm(item);
      for (Norm seen : norms)
        if (seen == n) fail(ErrorCode::InvalidArgument, "norm listed twice: " + std::string(item));
      norms.push_back(n);
    }
    start = end + 1;
  }
  if (norms.empty()) fail(ErrorCode::InvalidArgument, "empty norm list");
  return norms;
}

void apply_config_json(RunConfig& c, std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& ex) {
    fail(ErrorCode::Format, std::string("malformed config: ") + ex.what());
  }
  if (!doc.is_object()) fail(ErrorCode::Format, "config must be a JSON object");
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "model") c.model = v.get<std::string>();
      else if (key == "vocab") c.vocab = v.get<std::string>();
      else if (key == "corpus") c.corpus = v.get<std::string>();
      else if (key == "freq") c.freq = v.get<std::string>();
      else if (key == "out") c.out = v.get<std::string>();
      else if (key == "sample") c.sample = positive(v, "sample");
      else if (key == "shuffle_sample") c.shuffle_sample = v.get<bool>();
      else if (key == "k") c.k = positive(v, "k");
      else if (key == "norms") {
        if (v.is_string()) {
          c.norms = parse_norm_list(v.get<std::string>());
        } else {
          std::string joined;
          for (const auto& n : v) joined += n.get<std::string>() + ",";
          c.norms = parse_norm_list(joined);
        }
      } else if (key == "spearman_top") c.spearman_top = positive(v, "spearman_top");
      else if (key == "bins") c.bins = positive(v, "bins");
      else if (key == "per_bin") c.per_bin = positive(v, "per_bin");
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "layer_norm") c.layer_norm = parse_norm(v.get<std::string>());
      else if (key == "disable_layernorm") c.disable_layernorm = v.get<bool>();
      else if (key == "per_position") c.per_position = v.get<bool>();
      else if (key == "probe_depth") c.probe_depth = positive(v, "probe_depth");
      else if (key == "heads") c.heads = positive(v, "heads");
      else if (key == "special_tokens") c.special_tokens = v.get<std::vector<std::string>>();
      else fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    }
  } catch (const json::exception& ex) {
    fail(ErrorCode::Format, std::string("config value has the wrong type: ") + ex.what());
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  apply_config_json(config, read_file(path));
}

}  // namespace epa
