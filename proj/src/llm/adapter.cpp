#include "cxrlabel/llm/adapter.hpp"

#include "cxrlabel/parallel.hpp"
#include "json.hpp"

namespace cxrlabel::llm {

std::vector<LabelResult> label_reports(Transport& transport, const PromptTemplate& tmpl,
                                       const taxonomy::LabelSchema& schema,
                                       const std::vector<normalizer::CleanReport>& reports,
                                       std::size_t jobs) {
  std::vector<LabelResult> results(reports.size());
  parallel_for(reports.size(), jobs, [&](std::size_t i) {
    auto& r = results[i];
    r.sample_id = reports[i].acc;
    r.prompt = build_prompt(tmpl, reports[i]);
    try {
      r.response = parse_response(transport.send({r.sample_id, r.prompt}), schema);
    } catch (const TransportError& e) {
      r.error = e.what();
    }
  });
  return results;
}

std::string audit_log(const std::vector<LabelResult>& results,
                      const taxonomy::LabelSchema& schema, const std::string& model_id,
                      const std::string& run_header) {
  using ojson = nlohmann::ordered_json;
  std::string out = ojson{{"_run", run_header}, {"model", model_id}}.dump() + "\n";
  for (const auto& r : results) {
    ojson j;
    j["sample_id"] = r.sample_id;
    j["model"] = model_id;
    j["prompt"] = r.prompt;
    j["response"] = r.response.raw;
    j["labels"] = r.response.labels
                      ? ojson(taxonomy::positive_names(schema, *r.response.labels))
                      : ojson(nullptr);
    j["unknown"] = r.response.unknown;
    j["diagnosis"] = r.response.diagnosis;
    j["error"] = r.error ? ojson(*r.error) : ojson(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace cxrlabel::llm
