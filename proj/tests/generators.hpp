#pragma once

// Seeded random fixtures shared by the property tests and the acceptance suite.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "pcollab/decimal.hpp"

namespace pcollab::fixtures {

/// A realistic value set: a few calendar years, some special day/month
/// numbers, and amounts spread over many magnitudes with 0-2 decimals.
inline std::vector<Decimal> random_value_set(std::mt19937_64& rng) {
  std::vector<Decimal> out;
  std::uniform_int_distribution<int> count_years(0, 4);
  std::uniform_int_distribution<int> count_general(0, 10);
  std::uniform_int_distribution<int> count_special(0, 2);
  std::uniform_int_distribution<long long> year(1990, 2030);
  const long long specials[] = {1, 12, 28, 29, 30, 31};
  std::uniform_int_distribution<int> special_idx(0, 5);
  std::uniform_real_distribution<double> log_mag(0.0, 7.0);
  std::uniform_int_distribution<int> scale_dist(0, 2);
  std::bernoulli_distribution negative(0.1);

  const int ny = count_years(rng);
  for (int i = 0; i < ny; ++i) out.push_back(Decimal::from_int(year(rng)));
  const int ns = count_special(rng);
  for (int i = 0; i < ns; ++i) out.push_back(Decimal::from_int(specials[special_idx(rng)]));
  const int ng = count_general(rng);
  for (int i = 0; i < ng; ++i) {
    const int scale = scale_dist(rng);
    double mag = std::pow(10.0, log_mag(rng));
    long long units = static_cast<long long>(mag * std::pow(10.0, scale));
    if (units < 3) units = 3;
    if (negative(rng)) units = -units;
    out.emplace_back(units, scale);
  }
  return out;
}

inline std::string render_plain(const Decimal& v, bool thousands) { return v.format(v.scale(), thousands); }

/// Financial-style sentence text embedding the given values, separated by
/// words so that no two numbers touch.
inline std::string random_text(std::mt19937_64& rng, const std::vector<Decimal>& values) {
  static const char* words[] = {"revenue", "of",     "the",   "segment", "is",    "increased", "by",
                                "total",   "assets", "for",   "year",    "ended", "December",  "loans",
                                "billion", "and",    "units", "net",     "cost",  "Sentence"};
  std::uniform_int_distribution<int> word(0, 19);
  std::uniform_int_distribution<int> nwords(1, 4);
  std::bernoulli_distribution dollar(0.2), percent(0.1), sep(0.5);
  std::string text;
  for (auto& v : values) {
    const int k = nwords(rng);
    for (int i = 0; i < k; ++i) {
      text += words[word(rng)];
      text += ' ';
    }
    if (dollar(rng)) text += '$';
    text += render_plain(v, sep(rng));
    if (percent(rng)) text += '%';
    text += ' ';
  }
  text += "in total .";
  return text;
}

}  // namespace pcollab::fixtures

#include <regex>
#include <sstream>

#include "pcollab/query.hpp"

namespace pcollab::fixtures {

/// Parses the "Context:\n[Sentence i]: ...\nQuestion: ..." layout used in
/// prompt demonstrations back into a query.
inline ReasoningQuery query_from_prompt(const std::string& id, const std::string& text) {
  static const std::regex line_re(R"(^\[Sentence (\d+)\]: (.*)$)");
  ReasoningQuery q;
  q.id = id;
  std::istringstream in(text);
  std::string line;
  std::smatch m;
  while (std::getline(in, line)) {
    if (std::regex_match(line, m, line_re)) {
      q.sentences.push_back({std::stoi(m[1].str()), m[2].str()});
    } else if (line.rfind("Question: ", 0) == 0) {
      q.question = line.substr(10);
    }
  }
  return q;
}

}  // namespace pcollab::fixtures
