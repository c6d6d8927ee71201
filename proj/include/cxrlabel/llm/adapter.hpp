#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cxrlabel/llm/prompt.hpp"
#include "cxrlabel/llm/transport.hpp"

namespace cxrlabel::llm {

struct LabelResult {
  std::string sample_id;
  std::string prompt;
  AdapterResponse response;
  std::optional<std::string> error;  // transport failure, response then empty
};

/// Sends one prompt per report with at most `jobs` requests in flight.
/// Results follow input order regardless of completion order. Transport
/// failures are recorded per sample rather than aborting the batch.
std::vector<LabelResult> label_reports(Transport& transport, const PromptTemplate& tmpl,
                                       const taxonomy::LabelSchema& schema,
                                       const std::vector<normalizer::CleanReport>& reports,
                                       std::size_t jobs = 1);

/// JSON lines: {"_run", "model"} then one object per sample with the prompt,
/// raw response, parsed labels, unknown names, diagnosis and error.
std::string audit_log(const std::vector<LabelResult>& results,
                      const taxonomy::LabelSchema& schema, const std::string& model_id,
                      const std::string& run_header);

}  // namespace cxrlabel::llm
