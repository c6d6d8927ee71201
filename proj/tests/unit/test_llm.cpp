#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "cxrlabel/error.hpp"
#include "cxrlabel/labeler/synthetic.hpp"
#include "cxrlabel/llm/adapter.hpp"
#include "cxrlabel/llm/prompt.hpp"
#include "cxrlabel/llm/transport.hpp"
#include "cxrlabel/rng.hpp"
#include "cxrlabel/tsv.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace cxrlabel;
using namespace cxrlabel::llm;
using namespace std::chrono_literals;

namespace {

const taxonomy::LabelSchema& schema() { return taxonomy::LabelSchema::builtin(); }
std::size_t sec(const char* name) { return *schema().secondary_index(name); }

std::string error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

normalizer::CleanReport sample_clean_report() {
  normalizer::CleanReport r;
  r.acc = "01220110301300";
  r.findings = "双肺纹理增多、紊乱，见多发网格影。双侧顶部胸膜增厚。左肾可见插管影。";
  r.impression = "双肺间质性病变伴左下肺感染？双肺结节双下肺纤维硬结灶可能。双侧顶部胸膜增厚。";
  return r;
}

// Fails a fixed number of times with the given category, then answers.
class Flaky : public Transport {
 public:
  Flaky(int failures, FailureCategory c) : failures_(failures), category_(c) {}
  std::string send(const Request&) override {
    ++calls;
    if (calls <= failures_) throw TransportError(category_, "flaky");
    return "肺结节";
  }
  std::string model_id() const override { return "flaky"; }
  std::atomic<int> calls{0};

 private:
  int failures_;
  FailureCategory category_;
};

}  // namespace

TEST(Prompt, Substitution) {
  const auto t = PromptTemplate::parse("X{{{placeholder}}}Y");
  EXPECT_EQ(build_prompt(t, "R"), "XRY");
  EXPECT_EQ(error_code([] { PromptTemplate::parse("no placeholder"); }), "template-invalid");
  EXPECT_EQ(error_code([] { PromptTemplate::parse("{{{placeholder}}}{{{placeholder}}}"); }),
            "template-invalid");
}

TEST(Prompt, BuiltinWithSampleReport) {
  const auto& t = PromptTemplate::builtin();
  EXPECT_NO_THROW(t.check_coverage(schema(), 1));
  const auto prompt = build_prompt(t, sample_clean_report());
  EXPECT_NE(prompt.find("双肺间质性病变"), std::string::npos);
  EXPECT_NE(prompt.find(serialize_report(sample_clean_report())), std::string::npos);
  EXPECT_EQ(PromptTemplate::load(CXRLABEL_DATA_DIR "/prompt_template.txt").text(), t.text());
}

TEST(Prompt, CoverageNamesMissingLabel) {
  const auto t = PromptTemplate::parse("肺结节 {{{placeholder}}}");
  try {
    t.check_coverage(schema(), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "template-invalid");
    EXPECT_NE(std::string(e.what()).find("未见明显异常"), std::string::npos) << e.what();
  }
}

TEST(Prompt, InjectiveInReport) {
  const auto& t = PromptTemplate::builtin();
  auto a = sample_clean_report(), b = sample_clean_report();
  b.impression += "肺结节。";
  EXPECT_NE(build_prompt(t, a), build_prompt(t, b));
}

TEST(Parse, Examples) {
  const auto two = parse_response("肺结节，胸腔积液", schema());
  ASSERT_TRUE(two.labels);
  EXPECT_TRUE((*two.labels)[sec("肺结节")]);
  EXPECT_TRUE((*two.labels)[sec("胸腔积液")]);
  EXPECT_EQ(two.labels->count(), 2u);

  const auto normal = parse_response("未见明显异常", schema());
  ASSERT_TRUE(normal.labels);
  EXPECT_TRUE((*normal.labels)[schema().normal_secondary()]);
  EXPECT_EQ(normal.labels->count(), 1u);

  const auto junk = parse_response("I cannot help with that.", schema());
  EXPECT_FALSE(junk.labels);
  EXPECT_FALSE(junk.diagnosis.empty());
}

TEST(Parse, AnswerPrefixUnknownNamesAndLastLine) {
  const auto r = parse_response("分析如下：肺结节\n答案：胸膜增厚；肺气肿,PICC", schema());
  ASSERT_TRUE(r.labels);
  EXPECT_TRUE((*r.labels)[sec("胸膜增厚")]);
  EXPECT_TRUE((*r.labels)[sec("PICC")]);
  EXPECT_FALSE((*r.labels)[sec("肺结节")]);
  EXPECT_EQ(r.unknown, std::vector<std::string>{"肺气肿"});
}

TEST(Parse, RoundTripsSerializedLabels) {
  Rng rng(3, 9);
  for (int n = 0; n < 500; ++n) {
    taxonomy::SecondaryLabelVector v;
    for (std::size_t i = 0; i < taxonomy::kSecondaryCount; ++i) v[i] = rng.bernoulli(0.2);
    v = taxonomy::enforce_exclusion(schema(), v);
    const auto r = parse_response(serialize_labels(schema(), v), schema());
    ASSERT_TRUE(r.labels);
    EXPECT_EQ(*r.labels, v);
  }
}

TEST(Retry, CountsAttemptsAndBacksOff) {
  Flaky inner(10, FailureCategory::network);
  std::vector<std::chrono::milliseconds> sleeps;
  RetryingTransport t(inner, {3, 100ms, 2.0}, [&](auto d) { sleeps.push_back(d); });
  try {
    t.send({"A", "p"});
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.attempts(), 3);
    EXPECT_EQ(e.code(), "network");
    EXPECT_EQ(e.kind(), ErrorKind::transport);
  }
  EXPECT_EQ(inner.calls, 3);
  EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{100ms, 200ms}));
}

TEST(Retry, RecoversFromRateLimit) {
  Flaky inner(2, FailureCategory::rate_limit);
  RetryingTransport t(inner, {4, 1ms, 2.0}, [](auto) {});
  EXPECT_EQ(t.send({"A", "p"}), "肺结节");
  EXPECT_EQ(inner.calls, 3);
}

TEST(Retry, NeverRetriesAuth) {
  Flaky inner(10, FailureCategory::auth);
  RetryingTransport t(inner, {5, 1ms, 2.0}, [](auto) {});
  try {
    t.send({"A", "p"});
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.code(), "auth");
    EXPECT_EQ(e.attempts(), 1);
  }
  EXPECT_EQ(inner.calls, 1);
}

TEST(Adapter, MockEndToEnd) {
  const auto corpus = labeler::synthetic_corpus(schema(), 12, 3);
  std::map<std::string, std::string> canned;
  std::vector<normalizer::CleanReport> reports;
  for (const auto& s : corpus) {
    canned[s.report.acc] = "答案：" + serialize_labels(schema(), s.labels);
    reports.push_back(s.report);
  }
  normalizer::CleanReport orphan;
  orphan.acc = "MISSING";
  orphan.findings = "x";
  reports.push_back(orphan);

  MockTransport mock(canned, "gpt-3.5-turbo-1106");
  const auto results = label_reports(mock, PromptTemplate::builtin(), schema(), reports, 4);
  ASSERT_EQ(results.size(), reports.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(results[i].sample_id, corpus[i].report.acc);
    ASSERT_TRUE(results[i].response.labels);
    EXPECT_EQ(*results[i].response.labels, corpus[i].labels);
  }
  EXPECT_TRUE(results.back().error);

  const auto log = audit_log(results, schema(), mock.model_id(), "hdr");
  const auto first = nlohmann::json::parse(log.substr(0, log.find('\n')));
  EXPECT_EQ(first["model"], "gpt-3.5-turbo-1106");
  EXPECT_EQ(first["_run"], "hdr");
  std::size_t lines = 0;
  for (char c : log) lines += c == '\n';
  EXPECT_EQ(lines, reports.size() + 1);
  // Same inputs, same bytes.
  EXPECT_EQ(audit_log(label_reports(mock, PromptTemplate::builtin(), schema(), reports, 2),
                      schema(), mock.model_id(), "hdr"),
            log);
}

TEST(Adapter, MockFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "cxrlabel_mock.tsv";
  tsv::write(path, {{"sample_id", "response"}, {{"A", "肺结节"}}});
  auto mock = MockTransport::load(path, "m1");
  EXPECT_EQ(mock.send({"A", "p"}), "肺结节");
  EXPECT_EQ(error_code([&] { mock.send({"B", "p"}); }), "network");
  std::filesystem::remove(path);
}

TEST(Http, ConfigFromEnvironment) {
  ::unsetenv("CXR_LLM_ENDPOINT");
  try {
    HttpConfig::from_env();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "missing-config");
    EXPECT_NE(std::string(e.what()).find("CXR_LLM_ENDPOINT"), std::string::npos);
  }
}

TEST(Http, LocalServerStatusMapping) {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string seen_auth, seen_model;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    seen_auth = req.get_header_value("Authorization");
    const auto body = nlohmann::json::parse(req.body);
    seen_model = body["model"];
    const auto prompt = body["messages"][0]["content"].get<std::string>();
    if (prompt == "auth") {
      res.status = 401;
    } else if (prompt == "slow down") {
      res.status = 429;
    } else if (prompt == "boom") {
      res.status = 500;
    } else {
      nlohmann::json reply = {{"choices", {{{"message", {{"content", "肺结节"}}}}}}};
      res.set_content(reply.dump(), "application/json");
    }
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.api_key = "secret";
  cfg.model = "gpt-3.5-turbo-1106";
  cfg.timeout = 5s;
  HttpTransport http(cfg);
  EXPECT_EQ(http.send({"A", "hello"}), "肺结节");
  EXPECT_EQ(seen_auth, "Bearer secret");
  EXPECT_EQ(seen_model, "gpt-3.5-turbo-1106");
  EXPECT_EQ(error_code([&] { http.send({"A", "auth"}); }), "auth");
  EXPECT_EQ(error_code([&] { http.send({"A", "slow down"}); }), "rate-limit");
  EXPECT_EQ(error_code([&] { http.send({"A", "boom"}); }), "network");

  // Authentication failures are not retried even behind the retry wrapper.
  hits = 0;
  RetryingTransport retry(http, {3, 1ms, 2.0}, [](auto) {});
  EXPECT_EQ(error_code([&] { retry.send({"A", "auth"}); }), "auth");
  EXPECT_EQ(hits, 1);
  hits = 0;
  EXPECT_EQ(error_code([&] { retry.send({"A", "slow down"}); }), "rate-limit");
  EXPECT_EQ(hits, 3);

  server.stop();
  worker.join();

  HttpConfig dead = cfg;
  dead.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  dead.timeout = 1s;
  EXPECT_EQ(error_code([&] { HttpTransport(dead).send({"A", "x"}); }), "network");
  cfg.endpoint = "not a url";
  EXPECT_EQ(error_code([&] { HttpTransport{cfg}; }), "bad-endpoint");
}
