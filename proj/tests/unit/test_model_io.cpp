#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <functional>
#include <numeric>

#include "epa/corpus.hpp"
#include "epa/encoder_model.hpp"
#include "epa/error.hpp"
#include "epa/io.hpp"
#include "epa/random.hpp"
#include "epa/synth.hpp"
#include "epa/tensor_bundle.hpp"
#include "epa/tokenizer.hpp"
#include "epa/vocab.hpp"

using namespace epa;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::Internal;
}

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("vocab parsing") {
  const Vocab v = parse_vocab("a\nb\nc");
  REQUIRE(v.size() == 3);
  CHECK(*v.find("a") == 0);
  CHECK(*v.find("b") == 1);
  CHECK(*v.find("c") == 2);
  CHECK(v.special_ids().empty());

  const Vocab s = parse_vocab("[CLS]\nx\n[SEP]\n");
  CHECK(s.special_ids() == std::vector<TokenId>{0, 2});
  CHECK(s.is_special(0));
  CHECK_FALSE(s.is_special(1));

  CHECK(code_of([] { parse_vocab("a\na"); }) == ErrorCode::Format);
  CHECK(code_of([] { parse_vocab(""); }) == ErrorCode::Format);
  CHECK(code_of([] { parse_vocab("a\n\xC3\x28\n"); }) == ErrorCode::Format);
  CHECK(parse_vocab("a\r\nb\r\n").token(1) == "b");
  CHECK(parse_vocab(v.serialize()).tokens() == v.tokens());
}

TEST_CASE("utf-8 validation") {
  CHECK(is_valid_utf8("plain"));
  CHECK(is_valid_utf8("caf\xC3\xA9 \xE2\x82\xAC \xF0\x9F\x98\x80"));
  CHECK_FALSE(is_valid_utf8("\xC0\xAF"));          // overlong
  CHECK_FALSE(is_valid_utf8("\xED\xA0\x80"));      // surrogate
  CHECK_FALSE(is_valid_utf8("\xF4\x90\x80\x80"));  // above U+10FFFF
  CHECK_FALSE(is_valid_utf8("\xE2\x82"));          // truncated
}

TEST_CASE("bundle with one tensor") {
  TensorBundle b;
  const std::vector<float> values{1, 2, 3, 4, 5, 6};
  b.add("E", {3, 2}, values);
  const auto bytes = b.serialize();
  const TensorBundle back = TensorBundle::parse(bytes);
  CHECK(back.read_f32("E") == values);
  const std::vector<std::uint64_t> shape{3, 2};
  CHECK(back.read_f64("E", shape) == std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(back.serialize() == bytes);
  CHECK(std::memcmp(bytes.data(), "EPA1", 4) == 0);

  const std::vector<std::uint64_t> wrong{2, 3};
  CHECK(code_of([&] { back.read_f64("E", wrong); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { back.entry("F"); }) == ErrorCode::Format);
}

TEST_CASE("bundle errors") {
  TensorBundle b;
  b.add("E", {3, 2}, std::vector<float>(6, 0.5f));
  auto bytes = b.serialize();

  auto truncated = bytes;
  truncated.resize(truncated.size() - 5);
  CHECK(code_of([&] { TensorBundle::parse(truncated); }) == ErrorCode::Format);

  auto bad_magic = bytes;
  bad_magic[3] = '2';
  CHECK(code_of([&] { TensorBundle::parse(bad_magic); }) == ErrorCode::Format);

  auto long_manifest = bytes;
  long_manifest[4] = 0xFF;
  long_manifest[5] = 0xFF;
  CHECK(code_of([&] { TensorBundle::parse(long_manifest); }) == ErrorCode::Format);

  std::vector<TensorEntry> overlap{{"a", {2}, 0}, {"b", {2}, 4}};
  CHECK(code_of([&] { TensorBundle(overlap, std::vector<std::uint8_t>(16)); }) == ErrorCode::Format);
  std::vector<TensorEntry> dup{{"a", {1}, 0}, {"a", {1}, 4}};
  CHECK(code_of([&] { TensorBundle(dup, std::vector<std::uint8_t>(8)); }) == ErrorCode::Format);
  std::vector<TensorEntry> adjacent{{"a", {2}, 0}, {"b", {2}, 8}};
  CHECK_NOTHROW(TensorBundle(adjacent, std::vector<std::uint8_t>(16)));
}

TEST_CASE("bundle from hand-written bytes") {
  const std::string manifest = R"([{"name":"v","offset":0,"shape":[2]}])";
  std::string file = "EPA1";
  const auto len = static_cast<std::uint32_t>(manifest.size());
  for (int i = 0; i < 4; ++i) file.push_back(static_cast<char>((len >> (8 * i)) & 0xFF));
  file += manifest;
  const float payload[2] = {1.5f, -2.0f};
  file.append(reinterpret_cast<const char*>(payload), sizeof payload);  // little-endian host
  const TensorBundle b = TensorBundle::parse(bytes_of(file));
  CHECK(b.read_f32("v") == std::vector<float>{1.5f, -2.0f});
  CHECK(b.manifest_json() == manifest);
  CHECK(b.serialize() == bytes_of(file));
}

TEST_CASE("property: bundle round-trip") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    TensorBundle b;
    const std::size_t count = 1 + rng.below(6);
    for (std::size_t t = 0; t < count; ++t) {
      std::vector<std::uint64_t> shape;
      std::uint64_t n = 1;
      for (std::size_t r = 0, rank = 1 + rng.below(3); r < rank; ++r) {
        shape.push_back(1 + rng.below(5));
        n *= shape.back();
      }
      std::vector<float> values(n);
      for (auto& v : values) v = static_cast<float>(rng.normal());
      b.add("t" + std::to_string(t), shape, values);
    }
    const auto bytes = b.serialize();
    const TensorBundle back = TensorBundle::parse(bytes);
    CHECK(back == b);
    CHECK(back.serialize() == bytes);
  }
}

TEST_CASE("bundle files on disk") {
  const auto dir = std::filesystem::temp_directory_path() / "epa_unit_bundle";
  std::filesystem::create_directories(dir);
  const auto synth = synthesize_model(3, ModelDims{});
  const TensorBundle b = model_to_bundle(synth.model);
  save_bundle(b, dir / "m.epa");
  const auto raw = read_file(dir / "m.epa");
  CHECK(load_bundle(dir / "m.epa").serialize() == std::vector<std::uint8_t>(raw.begin(), raw.end()));
  CHECK_THROWS_AS(load_bundle(dir / "missing.epa"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("corpus parsing") {
  const Corpus c = parse_corpus(R"({"id":0,"token_ids":[5,6],"label":1})", 10);
  REQUIRE(c.size() == 1);
  CHECK(c[0].length() == 2);
  CHECK(c[0].label == 1);
  CHECK(parse_corpus("", 10).empty());
  CHECK(parse_corpus("\n\n", 10).empty());
  CHECK(code_of([] { parse_corpus(R"({"id":0,"token_ids":[10]})", 10); }) == ErrorCode::OutOfRange);
  CHECK(code_of([] {
          parse_corpus("{\"id\":1,\"token_ids\":[1]}\n{\"id\":1,\"token_ids\":[2]}", 10);
        }) == ErrorCode::Format);
  CHECK(code_of([] { parse_corpus(R"({"id":0,"token_ids":[]})", 10); }) == ErrorCode::Format);
  CHECK(code_of([] { parse_corpus(R"({"id":0,"token_ids":[1],"label":2})", 10); }) ==
        ErrorCode::Format);
  CHECK(code_of([] { parse_corpus("{not json", 10); }) == ErrorCode::Format);

  const Corpus two = parse_corpus("{\"id\":4,\"token_ids\":[1,2]}\n{\"id\":2,\"token_ids\":[3]}\n", 10);
  CHECK(two[0].id == 4);
  CHECK(two[1].id == 2);
  CHECK_FALSE(two[0].label.has_value());
  CHECK(parse_corpus(serialize_corpus(two), 10) == two);
  CHECK(find_sequence(two, 2).token_ids == std::vector<TokenId>{3});
  CHECK_THROWS_AS(find_sequence(two, 9), Error);
}

TEST_CASE("corpus sampling") {
  Corpus c;
  for (int i = 0; i < 20; ++i) c.push_back({i, {static_cast<TokenId>(i)}, std::nullopt});
  const Corpus head = sample_corpus(c, 5, false, 0);
  REQUIRE(head.size() == 5);
  CHECK(head.back().id == 4);
  CHECK(sample_corpus(c, 100, false, 0).size() == 20);

  const Corpus a = sample_corpus(c, 7, true, 42), b = sample_corpus(c, 7, true, 42);
  CHECK(a == b);
  REQUIRE(a.size() == 7);
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1].id < a[i].id);
}

TEST_CASE("frequency table") {
  Corpus c{{0, {0, 1, 0}, std::nullopt}};
  FrequencyTable f = compute_frequency_table(c, 3);
  CHECK(f.counts == std::vector<std::uint64_t>{2, 1, 0});
  CHECK(f.total == 3);

  Corpus twice{{0, {0}, std::nullopt}, {1, {0}, std::nullopt}};
  CHECK(compute_frequency_table(twice, 2).count(0) == 2);
  CHECK(code_of([] { compute_frequency_table({}, 3); }) == ErrorCode::InvalidArgument);

  // A token making up 42 of 1000 positions reports the 4.20% figure.
  Corpus period;
  for (int s = 0; s < 100; ++s) {
    CorpusSequence seq{s, {}, std::nullopt};
    for (int j = 0; j < 10; ++j) seq.token_ids.push_back((s * 10 + j) < 42 ? 1 : 2);
    period.push_back(seq);
  }
  const FrequencyTable pf = compute_frequency_table(period, 3);
  CHECK(pf.total == 1000);
  CHECK(std::fabs(100.0 * pf.relative(1) - 4.20) < 1e-12);
}

TEST_CASE("frequency json") {
  const FrequencyTable f = parse_frequency_json(R"({"0": 5, "2": 1})", 4);
  CHECK(f.counts == std::vector<std::uint64_t>{5, 0, 1, 0});
  CHECK(f.total == 6);
  CHECK(serialize_frequency_json(f) == "{\"0\":5,\"2\":1}\n");
  CHECK(parse_frequency_json(serialize_frequency_json(f), 4).counts == f.counts);
  CHECK(code_of([] { parse_frequency_json(R"({"x": 1})", 4); }) == ErrorCode::Format);
  CHECK(code_of([] { parse_frequency_json(R"({"9": 1})", 4); }) == ErrorCode::OutOfRange);
  CHECK(code_of([] { parse_frequency_json(R"({"1": -3})", 4); }) == ErrorCode::Format);
  CHECK(code_of([] { parse_frequency_json(R"([1])", 4); }) == ErrorCode::Format);
}

TEST_CASE("property: frequency conservation") {
  Rng rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t vocab = 2 + rng.below(30);
    Corpus c;
    std::uint64_t tokens = 0;
    for (std::int64_t s = 0, n = 1 + static_cast<std::int64_t>(rng.below(20)); s < n; ++s) {
      CorpusSequence seq{s, {}, std::nullopt};
      for (std::size_t j = 0, len = 1 + rng.below(12); j < len; ++j)
        seq.token_ids.push_back(static_cast<TokenId>(rng.below(vocab)));
      tokens += seq.length();
      c.push_back(seq);
    }
    const FrequencyTable f = compute_frequency_table(c, vocab);
    CHECK(f.counts.size() == vocab);
    CHECK(std::accumulate(f.counts.begin(), f.counts.end(), std::uint64_t{0}) == tokens);
    CHECK(f.total == tokens);
  }
}

TEST_CASE("wordpiece") {
  const Vocab v(std::vector<std::string>{"[UNK]", "hello", "un", "##aff", "##able", "[CLS]", "a",
                                         "##b", "ab", ",", "world"});
  CHECK(tokenize_wordpiece("hello", v) == std::vector<TokenId>{1});
  CHECK(tokenize_wordpiece("unaffable", v) == std::vector<TokenId>{2, 3, 4});
  CHECK(tokenize_wordpiece("qzx", v) == std::vector<TokenId>{0});
  CHECK(tokenize_wordpiece("HeLLo  World", v) == std::vector<TokenId>{1, 10});
  CHECK(tokenize_wordpiece("[CLS] hello", v) == std::vector<TokenId>{5, 1});
  CHECK(tokenize_wordpiece("ab", v) == std::vector<TokenId>{8});  // longest match first
  CHECK(tokenize_wordpiece("", v).empty());
  CHECK(tokenize_wordpiece("unaffablex", v) == std::vector<TokenId>{0});

  WordPieceOptions split;
  split.split_punctuation = true;
  CHECK(tokenize_wordpiece("hello,world", v, split) == std::vector<TokenId>{1, 9, 10});
  CHECK(tokenize_wordpiece("hello,world", v) == std::vector<TokenId>{0});

  WordPieceOptions shortcap;
  shortcap.max_chars_per_word = 4;
  CHECK(tokenize_wordpiece("hello", v, shortcap) == std::vector<TokenId>{0});

  CHECK_THROWS_AS(WordPieceTokenizer(parse_vocab("a\nb")), Error);
}

TEST_CASE("property: tokenizer totality") {
  const Vocab v(std::vector<std::string>{"[UNK]", "a", "b", "##a", "##b", "ab", "##ab", "\xC3\xA9"});
  Rng rng(23);
  const std::vector<std::string> pieces{"a", "b", "A", " ", "\t", "\xC3\xA9", "x", "\n", "#", "ab"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    for (std::size_t i = 0, n = rng.below(30); i < n; ++i) text += pieces[rng.below(pieces.size())];
    for (TokenId id : tokenize_wordpiece(text, v)) CHECK(id < v.size());
  }
}

TEST_CASE("synthesized model") {
  const ModelDims dims{};
  const auto a = synthesize_model(7, dims), b = synthesize_model(7, dims);
  CHECK(model_to_bundle(a.model).serialize() == model_to_bundle(b.model).serialize());
  CHECK(a.vocab.tokens() == b.vocab.tokens());
  CHECK(a.vocab.token(0) == "[PAD]");
  CHECK(a.vocab.token(5) == "tok0000");
  CHECK(a.vocab.size() == 100);
  CHECK(a.model.layers.size() == 4);
  CHECK(synthesize_model(8, dims).model.tok_emb != a.model.tok_emb);

  for (double w : a.model.layers[2].w1.values()) {
    CHECK(w >= -0.1);
    CHECK(w < 0.1);
    CHECK(static_cast<double>(static_cast<float>(w)) == w);
  }

  const TensorBundle bundle = model_to_bundle(a.model);
  CHECK(bundle.contains("L3.ln2.beta"));
  CHECK_FALSE(bundle.contains("L4.Wq"));
  CHECK(bundle.entry("tok_emb").shape == std::vector<std::uint64_t>{100, 16});
  CHECK(bundle.entry("pos_emb").shape == std::vector<std::uint64_t>{64, 16});
  CHECK(bundle.entry("L0.W1").shape == std::vector<std::uint64_t>{16, 32});
  CHECK(bundle.entry("L0.W2").shape == std::vector<std::uint64_t>{32, 16});
  CHECK(bundle.entry("L0.b1").shape == std::vector<std::uint64_t>{32});

  const EncoderModel back = model_from_bundle(TensorBundle::parse(bundle.serialize()));
  CHECK(back.dims == dims);
  CHECK(back.layers[3].w2 == a.model.layers[3].w2);

  try {
    synthesize_model(1, ModelDims{100, 10, 4, 4, 32, 64});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
    CHECK(std::string(e.what()).find("divisible") != std::string::npos);
  }
}

TEST_CASE("model bundle without head count") {
  const auto synth = synthesize_model(2, ModelDims{});
  const TensorBundle full = model_to_bundle(synth.model);
  TensorBundle stripped;
  for (const auto& e : full.manifest()) {
    if (e.name == kHeadsTensor) continue;
    const auto values = full.read_f32(e.name);
    stripped.add(e.name, e.shape, values);
  }
  CHECK_THROWS_AS(model_from_bundle(stripped), Error);
  CHECK(model_from_bundle(stripped, 4).dims.heads == 4);
  CHECK(model_from_bundle(full, 1).dims.heads == 1);

  TensorBundle missing;
  missing.add("tok_emb", {3, 2}, std::vector<float>(6, 1.0f));
  CHECK_THROWS_AS(model_from_bundle(missing, 1), Error);
  CHECK(embedding_from_bundle(missing).rows() == 3);
}

TEST_CASE("clustered fixture") {
  ModelDims dims{60, 8, 1, 2, 16, 32};
  ClusteredGeometry g;
  g.sequences = 100;
  const auto a = synthesize_clustered_fixture(5, dims, g);
  const auto b = synthesize_clustered_fixture(5, dims, g);
  CHECK(a.model.tok_emb == b.model.tok_emb);
  CHECK(a.corpus == b.corpus);
  CHECK(a.corpus.size() == 100);
  const FrequencyTable f = compute_frequency_table(a.corpus, dims.vocab_size);
  CHECK(f.count(5) > f.count(50));
  for (const auto& s : a.corpus) {
    CHECK(s.token_ids.front() == 2);
    CHECK(s.token_ids.back() == 3);
    CHECK(s.length() >= g.min_words + 2);
    CHECK(s.length() <= g.max_words + 2);
  }
}
