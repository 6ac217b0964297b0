#pragma once

// Scripted end-to-end world: growth-rate questions over flattened table rows,
// with mock models that behave like the real roles (the local model cites
// evidence and is sometimes wrong, the shifter renames topics, the remote
// model writes a correct tool for whatever numbers it is shown).

#include <map>
#include <mutex>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "pcollab/distillation_filter.hpp"
#include "pcollab/evaluation.hpp"
#include "pcollab/prompts.hpp"

namespace pcollab::e2e {

struct TopicPair {
  const char* original;
  const char* shifted;
};

inline const std::vector<TopicPair>& topics() {
  static const std::vector<TopicPair> t = {{"Mortgage loans", "Vehicle units"},  {"Equity securities", "Robot units"},
                                           {"Fixed maturities", "Solar panels"}, {"Commercial paper", "Wind turbines"},
                                           {"Trading assets", "Water tanks"},    {"Policy loans", "Cargo drones"}};
  return t;
}

inline const std::vector<TopicPair>& segments() {
  static const std::vector<TopicPair> s = {{"individual annuity", "rural transit"},
                                           {"institutional investment", "urban logistics"},
                                           {"retail banking", "harbor shipping"}};
  return s;
}

inline std::string with_commas(long long v, bool sep) {
  std::string s = std::to_string(v);
  if (!sep) return s;
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
  return s;
}

/// Exact (b2 - b1) / b1 at five places, half away from zero.
inline Decimal growth_oracle(long long b1, long long b2) {
  __int128 num = static_cast<__int128>(b2 - b1) * 100000;
  __int128 q = num / b1, r = num % b1;
  if (r < 0) r = -r;
  const __int128 den = b1 < 0 ? -b1 : b1;
  if (2 * r >= den) q += (num < 0) == (b1 < 0) ? 1 : -1;
  return Decimal(q, 5);
}

struct Case {
  ReasoningQuery query;
  long long b1 = 0, b2 = 0;
  int correct_samples = 0;  // local samples that compute the right formula
};

/// Five sentences: a narrative line and two rows for each of two topics.
inline Case make_case(std::mt19937_64& rng, const std::string& id) {
  std::uniform_int_distribution<std::size_t> pick(0, topics().size() - 1);
  std::size_t ia = pick(rng), ib = pick(rng);
  while (ib == ia) ib = pick(rng);
  const auto& A = topics()[ia];
  const auto& B = topics()[ib];
  const auto& seg = segments()[std::uniform_int_distribution<std::size_t>(0, segments().size() - 1)(rng)];
  std::uniform_int_distribution<long long> year(1995, 2025), mag(35, 250000), tenths(33, 999);
  std::bernoulli_distribution sep(0.5);
  const long long y2 = year(rng), y1 = y2 - 1;
  const long long a1 = mag(rng), a2 = mag(rng);
  long long b1 = mag(rng), b2 = mag(rng);
  while (b2 == b1) b2 = mag(rng);
  const long long x = tenths(rng);

  Case c;
  c.b1 = b1;
  c.b2 = b2;
  c.correct_samples = std::uniform_int_distribution<int>(0, 7)(rng);
  auto& q = c.query;
  q.id = id;
  auto row = [&](const char* topic, long long y, long long v) {
    return std::string(topic) + " of For the years ended December 31, " + std::to_string(y) + " is " + with_commas(v, sep(rng)) + " .";
  };
  q.sentences = {{0, "Total " + std::string(A.original) + " revenue increased $" + std::to_string(x / 10) + "." +
                         std::to_string(x % 10) + " billion due to growth in the " + seg.original + " business."},
                 {3, row(A.original, y2, a2)},
                 {4, row(A.original, y1, a1)},
                 {7, row(B.original, y2, b2)},
                 {8, row(B.original, y1, b1)}};
  q.question = "What is the growth rate of " + std::string(B.original) + " from " + std::to_string(y1) + " to " +
               std::to_string(y2) + "?";
  q.gold_answer = growth_oracle(b1, b2);
  return c;
}

inline std::vector<Case> make_cases(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::vector<Case> out;
  for (int i = 0; i < n; ++i) out.push_back(make_case(rng, "q" + std::to_string(i)));
  return out;
}

inline std::vector<ReasoningQuery> queries_of(const std::vector<Case>& cases) {
  std::vector<ReasoningQuery> out;
  for (auto& c : cases) out.push_back(c.query);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing what a model sees
// ---------------------------------------------------------------------------

struct Row {
  std::string label;  // "[Sentence k]" or empty
  std::string topic;
  std::string year;
  std::string value;  // digits without separators
};

struct Seen {
  std::vector<Row> rows;
  std::string target, from, to;
};

inline std::string strip_commas(std::string s) {
  s.erase(std::remove(s.begin(), s.end(), ','), s.end());
  return s;
}

inline Seen parse_seen(const std::string& text) {
  static const std::regex row(R"((\[Sentence \d+\]: )?([A-Za-z ]+?) of For the years ended December 31, (\d{4}) is ([\d,]+))");
  static const std::regex question(R"(growth rate of ([A-Za-z ]+?) from (\d{4}) to (\d{4}))");
  Seen s;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), row); it != std::sregex_iterator(); ++it) {
    std::string label = (*it)[1].str();
    if (!label.empty()) label = label.substr(0, label.size() - 2);
    s.rows.push_back({label, (*it)[2].str(), (*it)[3].str(), strip_commas((*it)[4].str())});
  }
  std::smatch m;
  if (std::regex_search(text, m, question)) {
    s.target = m[1].str();
    s.from = m[2].str();
    s.to = m[3].str();
  }
  return s;
}

inline std::string ident(std::string s) {
  for (auto& ch : s) ch = ch == ' ' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

/// Python tool for the growth question; `flipped` divides by the wrong year.
inline std::string growth_code(const Seen& s, bool flipped = false) {
  std::string from_v, to_v;
  for (auto& r : s.rows)
    if (r.topic == s.target) {
      if (r.year == s.from) from_v = r.value;
      if (r.year == s.to) to_v = r.value;
    }
  if (from_v.empty() || to_v.empty()) return "ans = undefined_value\n";
  const std::string a = ident(s.target) + "_" + s.from, b = ident(s.target) + "_" + s.to;
  return a + " = " + from_v + "\n" + b + " = " + to_v + "\ngrowth_rate = (" + b + " - " + a + ") / " +
         (flipped ? b : a) + "\n";
}

inline std::string fenced(const std::string& code) { return "```python\n" + code + "```"; }

inline std::string last_user(const ChatRequest& r) {
  for (auto it = r.messages.rbegin(); it != r.messages.rend(); ++it)
    if (it->role == "user") return it->content;
  return "";
}

inline std::string system_of(const ChatRequest& r) {
  return !r.messages.empty() && r.messages.front().role == "system" ? r.messages.front().content : "";
}

inline std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
  return s;
}

inline std::string shift_topics(std::string s) {
  for (auto& t : topics()) s = replace_all(s, t.original, t.shifted);
  for (auto& t : segments()) s = replace_all(s, t.original, t.shifted);
  return replace_all(s, "revenue", "output");
}

// ---------------------------------------------------------------------------
// Mock world
// ---------------------------------------------------------------------------

enum class ShifterMode { Good, CorruptNumbers };
enum class RemoteMode { Good, NoCode, BadCode };

struct World {
  std::map<std::string, int> correct_by_question;  // question text -> correct local samples
  ShifterMode shifter_mode = ShifterMode::Good;
  RemoteMode remote_mode = RemoteMode::Good;
  std::shared_ptr<CallLog> log = std::make_shared<CallLog>();

  explicit World(const std::vector<Case>& cases) {
    for (auto& c : cases) correct_by_question[c.query.question] = c.correct_samples;
  }

  /// Fresh mock clients, every call recorded into `log`.
  Clients clients() {
    auto counters = std::make_shared<std::pair<std::mutex, std::map<std::string, int>>>();
    auto local = std::make_shared<ScriptedChatClient>();
    auto shifter = std::make_shared<ScriptedChatClient>();
    auto remote = std::make_shared<ScriptedChatClient>();
    auto judge = std::make_shared<ScriptedChatClient>();
    const auto correct = correct_by_question;
    local->respond(Role::Local, [counters, correct](const ChatRequest& r) -> std::string {
      if (system_of(r) == prompts::kHintDescribe) {
        const Seen s = parse_seen(last_user(r));
        return "This question asks for the year-over-year growth rate of " + s.target + ".";
      }
      const std::string text = last_user(r);
      int k = 0;
      {
        std::lock_guard lock(counters->first);
        k = counters->second[r.fingerprint()]++;
      }
      const Seen s = parse_seen(text);
      int good = 7;
      for (auto& [question, n] : correct)
        if (text.find(question) != std::string::npos) good = n;
      std::string cite;
      for (auto& row : s.rows)
        if (row.topic == s.target && !row.label.empty()) cite += row.label + " ";
      return "The needed values are in " + cite + "\n" + fenced(growth_code(s, (k % 7) >= good));
    });
    const auto smode = shifter_mode;
    shifter->respond(Role::Shifter, [smode](const ChatRequest& r) -> std::string {
      std::string query;
      for (std::size_t i = 1; i < r.messages.size(); ++i)
        if (r.messages[i].role == "user" && r.messages[i].content.rfind("Context:", 0) == 0 &&
            r.messages[i].content != prompts::rewriter_demonstration().input)
          query = r.messages[i].content;
      std::string out = shift_topics(query);
      if (smode == ShifterMode::CorruptNumbers) out = std::regex_replace(out, std::regex(R"((\d{4}) is )"), "$1 is 9");
      return "<rewritten>\n" + out + "\n</rewritten>";
    });
    const auto rmode = remote_mode;
    remote->respond(Role::Remote, [rmode](const ChatRequest& r) -> std::string {
      if (system_of(r) == prompts::kHintAdvise) return "Divide the change between the two years by the earlier value.";
      if (rmode == RemoteMode::NoCode) return "I would compute the growth rate by hand.";
      if (rmode == RemoteMode::BadCode) return fenced("growth_rate = missing_name / 2\n");
      return "Here is the tool.\n" + fenced(growth_code(parse_seen(last_user(r))));
    });
    judge->respond(Role::Judge, [](const ChatRequest& r) -> std::string {
      const std::string u = last_user(r);
      const auto split = u.find("\n\nContext B:\n");
      const std::string a = u.substr(0, split), b = u.substr(split);
      for (auto& t : topics())
        if (a.find(t.original) != std::string::npos && b.find(t.original) != std::string::npos) return "Yes";
      return "No";
    });
    return Clients{local, shifter, remote, judge}.recorded(log);
  }
};

/// The default test configuration: seven samples, full-context retrieval.
inline CascadeConfig config(double tau = 1.0) {
  CascadeConfig cfg;
  cfg.tau = tau;
  cfg.global_seed = 20240917;
  return cfg;
}

/// Ten filter candidates built from the world's cases: two leaks, one
/// conflict, one inconsistent answer. The other six should be kept.
inline std::vector<TrainingCandidate> ten_candidates() {
  std::vector<TrainingCandidate> out;
  for (auto& c : make_cases(41, 10)) {
    TrainingCandidate t;
    t.id = c.query.id;
    t.original = c.query;
    for (auto& s : c.query.sentences) t.rewrite.sentences.push_back(shift_topics(s.text));
    t.rewrite.question = shift_topics(c.query.question);
    out.push_back(std::move(t));
  }
  out[1].rewrite.sentences[0] = out[1].original.sentences[0].text;  // leak
  out[4].rewrite.question = out[4].original.question;               // leak
  auto& c6 = out[6].rewrite.sentences;                               // conflict: two values for one row
  c6[4] = c6[3].substr(0, c6[3].rfind(" is ")) + " is 777 .";
  auto& q8 = out[8].rewrite.question;  // inconsistent: asks about the other topic
  const auto seen = parse_seen(out[8].rewrite.sentences[1]);
  q8 = "What is the growth rate of " + seen.rows[0].topic + q8.substr(q8.find(" from "));
  return out;
}

inline Solver growth_solver() {
  return [](const std::vector<std::string>& s, const std::string& q) {
    std::string text;
    for (auto& x : s) text += x + "\n";
    text += "Question: " + q;
    InProcessSandbox sb;
    const auto r = sb.execute({"solve", growth_code(parse_seen(text)), 5000, 256});
    if (!r.ok()) throw SolverFailure(r.error);
    return *r.decimal_answer();
  };
}

inline ChatClientPtr topic_judge() {
  World world({});
  return world.clients().judge;
}

}  // namespace pcollab::e2e
