#include <gtest/gtest.h>

#include <set>

#include "cxrlabel/error.hpp"
#include "cxrlabel/parallel.hpp"
#include "cxrlabel/rng.hpp"
#include "cxrlabel/run_header.hpp"
#include "cxrlabel/tsv.hpp"
#include "cxrlabel/utf8.hpp"

using namespace cxrlabel;

TEST(Utf8, RoundTripsCjkAndAscii) {
  const std::string s = "双肺PICC，CT检查。";
  const auto w = utf8::decode(s);
  EXPECT_EQ(w.size(), 12u);
  EXPECT_EQ(w[0], L'双');
  EXPECT_EQ(utf8::encode(w), s);
  EXPECT_EQ(utf8::length(s), 12u);
}

TEST(Utf8, RejectsMalformed) {
  EXPECT_FALSE(utf8::is_valid("\xE5\x8F"));
  EXPECT_FALSE(utf8::is_valid("\xC0\xAF"));  // overlong
  EXPECT_FALSE(utf8::is_valid("\xED\xA0\x80"));  // surrogate
  try {
    utf8::decode("ab\xFF");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "invalid-utf8");
    EXPECT_EQ(e.kind(), ErrorKind::input);
  }
}

TEST(Tsv, EscapesRoundTrip) {
  tsv::Table t;
  t.header = {"a", "b"};
  t.rows = {{"x\ty", "line1\nline2\\"}, {"", "#not a comment"}, {"#first", "x"}};
  const auto text = tsv::format(t, {"header line"});
  EXPECT_EQ(text.substr(0, 14), "# header line\n");
  const auto back = tsv::parse(text);
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
}

TEST(Tsv, TrailingEmptyFieldIsKept) {
  const auto t = tsv::parse("a\tb\tc\n1\t2\t\n");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0], (std::vector<std::string>{"1", "2", ""}));
}

TEST(Tsv, RaggedRowIsAnError) {
  EXPECT_THROW(tsv::parse("a\tb\n1\n"), Error);
}

TEST(Tsv, MissingColumnNamesIt) {
  const auto t = tsv::parse("a\n1\n");
  try {
    t.require_column("征象描述");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("征象描述"), std::string::npos);
  }
}

TEST(RunHeader, DigestDependsOnArgsOnly) {
  const std::vector<std::string> a = {"eval", "--gold", "g.tsv"};
  const std::vector<std::string> b = {"eval", "--gold", "h.tsv"};
  const auto ha = RunHeader::from_args(a, 1);
  EXPECT_EQ(ha.line(), RunHeader::from_args(a, 1).line());
  EXPECT_NE(ha.digest_hex(), RunHeader::from_args(b, 1).digest_hex());
  EXPECT_EQ(ha.line().rfind("cxrlabel " CXRLABEL_VERSION " seed=1 config=", 0), 0u);
  // Argument boundaries matter.
  const std::vector<std::string> c = {"ab", "c"};
  const std::vector<std::string> d = {"a", "bc"};
  EXPECT_NE(RunHeader::from_args(c, 0).config_digest,
            RunHeader::from_args(d, 0).config_digest);
}

TEST(Fnv, KnownVector) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Rng, StreamsAreIndependentAndReproducible) {
  Rng a(42, 1), b(42, 1), c(42, 2);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
}

TEST(Rng, BelowAndUniformStayInRange) {
  Rng r(7);
  for (int i = 0; i < 10000; ++i) {
    EXPECT_LT(r.below(13), 13u);
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Rng, ShuffleIsPermutation) {
  Rng r(3);
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  r.shuffle(v);
  std::set<int> s(v.begin(), v.end());
  EXPECT_EQ(s.size(), 100u);
}

TEST(Parallel, CoversEveryIndexAndPropagatesErrors) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i]++; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 4,
                            [](std::size_t i) {
                              if (i == 5) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Error, ExitCodes) {
  EXPECT_EQ(exit_code(ErrorKind::usage), 1);
  EXPECT_EQ(exit_code(ErrorKind::input), 2);
  EXPECT_EQ(exit_code(ErrorKind::compute), 3);
  EXPECT_EQ(exit_code(ErrorKind::transport), 4);
  const Error e(ErrorKind::input, "taxonomy", "schema-invalid", "13 secondary labels");
  EXPECT_STREQ(e.what(), "taxonomy: schema-invalid: 13 secondary labels");
}
