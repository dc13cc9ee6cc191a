#include "epa/corpus.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <unordered_set>

#include "epa/error.hpp"
#include "epa/io.hpp"
#include "epa/random.hpp"

namespace epa {
namespace {

using json = nlohmann::json;

std::string where(std::size_t line) { return "corpus line " + std::to_string(line) + ": "; }

}  // namespace

Corpus parse_corpus(std::string_view text, std::size_t vocab_size) {
  Corpus corpus;
  std::unordered_set<std::int64_t> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& ex) {
      fail(ErrorCode::Format, where(line_no) + ex.what());
    }
    CorpusSequence seq;
    try {
      seq.id = record.at("id").get<std::int64_t>();
      for (const auto& tok : record.at("token_ids")) {
        const auto raw = tok.get<std::int64_t>();
        if (raw < 0 || static_cast<std::uint64_t>(raw) >= vocab_size) {
          fail(ErrorCode::OutOfRange, where(line_no) + "token id " + std::to_string(raw) +
                                          " outside vocabulary of size " +
                                          std::to_string(vocab_size));
        }
        seq.token_ids.push_back(static_cast<TokenId>(raw));
      }
      if (auto it = record.find("label"); it != record.end() && !it->is_null()) {
        const int label = it->get<int>();
        if (label != 0 && label != 1)
          fail(ErrorCode::Format, where(line_no) + "label must be 0 or 1");
        seq.label = label;
      }
    } catch (const json::exception& ex) {
      fail(ErrorCode::Format, where(line_no) + ex.what());
    }
    if (seq.token_ids.empty()) fail(ErrorCode::Format, where(line_no) + "empty token_ids");
    if (!seen.insert(seq.id).second)
      fail(ErrorCode::Format, where(line_no) + "duplicate sequence id " + std::to_string(seq.id));
    corpus.push_back(std::move(seq));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, std::size_t vocab_size) {
  return parse_corpus(read_file(path), vocab_size);
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& seq : corpus) {
    json record{{"id", seq.id}, {"token_ids", seq.token_ids}};
    if (seq.label) record["label"] = *seq.label;
    out += record.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file(path, serialize_corpus(corpus));
}

const CorpusSequence& find_sequence(const Corpus& corpus, std::int64_t id) {
  for (const auto& seq : corpus)
    if (seq.id == id) return seq;
  fail(ErrorCode::OutOfRange, "no sequence with id " + std::to_string(id) + " in corpus");
}

Corpus sample_corpus(const Corpus& corpus, std::size_t n, bool shuffle, std::uint64_t seed) {
  if (n >= corpus.size()) return corpus;
  if (!shuffle) return Corpus(corpus.begin(), corpus.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  order.resize(n);
  std::sort(order.begin(), order.end());
  Corpus out;
  out.reserve(n);
  for (auto i : order) out.push_back(corpus[i]);
  return out;
}

std::uint64_t FrequencyTable::count(TokenId id) const {
  if (id >= counts.size())
    fail(ErrorCode::OutOfRange, "token id " + std::to_string(id) + " outside frequency table");
  return counts[id];
}

double FrequencyTable::relative(TokenId id) const {
  if (total == 0) fail(ErrorCode::Degenerate, "relative frequency of an empty table");
  return static_cast<double>(count(id)) / static_cast<double>(total);
}

FrequencyTable compute_frequency_table(const Corpus& corpus, std::size_t vocab_size) {
  if (corpus.empty()) fail(ErrorCode::InvalidArgument, "frequency table of an empty corpus");
  FrequencyTable table;
  table.counts.assign(vocab_size, 0);
  for (const auto& seq : corpus) {
    for (TokenId t : seq.token_ids) {
      if (t >= vocab_size) fail(ErrorCode::OutOfRange, "token id outside vocabulary");
      ++table.counts[t];
      ++table.total;
    }
  }
  return table;
}

FrequencyTable parse_frequency_json(std::string_view text, std::size_t vocab_size) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& ex) {
    fail(ErrorCode::Format, std::string("malformed frequency file: ") + ex.what());
  }
  if (!doc.is_object()) fail(ErrorCode::Format, "frequency file must be a JSON object");
  FrequencyTable table;
  table.counts.assign(vocab_size, 0);
  for (const auto& [key, value] : doc.items()) {
    std::size_t used = 0;
    unsigned long long id = 0;
    try {
      id = std::stoull(key, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != key.size() || key.empty() || key[0] == '-' || key[0] == '+')
      fail(ErrorCode::Format, "frequency key '" + key + "' is not a token id");
    if (id >= vocab_size)
      fail(ErrorCode::OutOfRange, "frequency key " + key + " outside vocabulary");
    if (!value.is_number_integer() || value.get<std::int64_t>() < 0)
      fail(ErrorCode::Format, "frequency for token " + key + " must be a non-negative integer");
    table.counts[id] = value.get<std::uint64_t>();
  }
  table.total = std::accumulate(table.counts.begin(), table.counts.end(), std::uint64_t{0});
  return table;
}

FrequencyTable load_frequency_json(const std::filesystem::path& path, std::size_t vocab_size) {
  return parse_frequency_json(read_file(path), vocab_size);
}

std::string serialize_frequency_json(const FrequencyTable& table) {
  // Keys in numeric order; a plain json object would sort them as strings.
  std::string out = "{";
  bool first = true;
  for (std::size_t i = 0; i < table.counts.size(); ++i) {
    if (table.counts[i] == 0) continue;
    if (!first) out += ",";
    first = false;
    out += "\"" + std::to_string(i) + "\":" + std::to_string(table.counts[i]);
  }
  return out + "}\n";
}

}  // namespace epa
