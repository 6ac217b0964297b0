#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcollab/answers.hpp"
#include "pcollab/decimal.hpp"

namespace pcollab {

struct Sentence {
  int index = 0;
  std::string text;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

/// A document question: context sentences (tables already flattened as
/// "[row] of [column] is [value]"), the question, and an optional gold answer.
struct ReasoningQuery {
  std::string id;
  std::vector<Sentence> sentences;  // indices unique and ascending
  std::string question;
  std::optional<Decimal> gold_answer;

  std::vector<int> indices() const {
    std::vector<int> out;
    for (auto& s : sentences) out.push_back(s.index);
    return out;
  }

  std::vector<std::string> texts() const {
    std::vector<std::string> out;
    for (auto& s : sentences) out.push_back(s.text);
    return out;
  }

  void validate() const {
    for (std::size_t i = 1; i < sentences.size(); ++i)
      if (sentences[i].index <= sentences[i - 1].index)
        throw std::invalid_argument("query " + id + ": sentence indices must be unique and ascending");
  }

  /// Accepts sentences as plain strings (indexed by position), [index, text]
  /// pairs or {"index", "text"} objects; "answer" as number or string.
  static ReasoningQuery from_json(const nlohmann::json& j) {
    ReasoningQuery q;
    q.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    int pos = 0;
    for (auto& s : j.at("sentences")) {
      if (s.is_string()) {
        q.sentences.push_back({pos, s.get<std::string>()});
      } else if (s.is_array()) {
        q.sentences.push_back({s.at(0).get<int>(), s.at(1).get<std::string>()});
      } else {
        q.sentences.push_back({s.at("index").get<int>(), s.at("text").get<std::string>()});
      }
      ++pos;
    }
    q.question = j.at("question").get<std::string>();
    if (j.contains("answer") && !j["answer"].is_null()) {
      const auto& a = j["answer"];
      q.gold_answer = normalize_answer(a.is_string() ? a.get<std::string>() : a.dump());
    }
    q.validate();
    return q;
  }

  nlohmann::json to_json() const {
    nlohmann::json s = nlohmann::json::array();
    for (auto& x : sentences) s.push_back({{"index", x.index}, {"text", x.text}});
    nlohmann::json j = {{"id", id}, {"sentences", std::move(s)}, {"question", question}};
    if (gold_answer) j["answer"] = gold_answer->to_string();
    return j;
  }
};

/// Renders "Context:\n[Sentence i]: text\n...\n\nQuestion: q" with the given
/// labels (one per sentence).
inline std::string render_prompt_query(const std::vector<int>& labels, const std::vector<std::string>& sentences,
                                       const std::string& question) {
  std::string out = "Context:\n";
  for (std::size_t i = 0; i < sentences.size(); ++i)
    out += "[Sentence " + std::to_string(labels[i]) + "]: " + sentences[i] + "\n";
  out += "\nQuestion: " + question;
  return out;
}

inline std::string render_prompt_query(const ReasoningQuery& q) {
  return render_prompt_query(q.indices(), q.texts(), q.question);
}

/// Plain text of the query for the leakage judge ("context A").
inline std::string plain_context(const ReasoningQuery& q) {
  std::string out;
  for (auto& s : q.sentences) out += s.text + "\n";
  out += "Question: " + q.question;
  return out;
}

}  // namespace pcollab
