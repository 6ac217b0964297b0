#pragma once

// Prompt assets. The instruction texts for local inference, the topic
// rewriter and the leakage judge are kept word for word (including their
// original numbering and wording quirks); changing them changes model
// behaviour, so bump kPromptVersion on any edit.

#include <string>
#include <vector>

namespace pcollab::prompts {

inline constexpr const char* kPromptVersion = "1";

inline constexpr const char* kLocalInference =
    R"(You are a helpful assistant. Given the context and the problem, you need to write Python code to solve the problem. Your solution should follow task instructions.

Task instruction:
Each sentence in the context is numbered starting with [Sentence id]. Your task is to read the given context and write Python code with accompanying comments to solve the question. The Python solution must be enclosed within a code block that starts with the tag ```python and ends with the tag ```.

Requirements:
1, Break the question down into as many detailed steps as possible.
1, In your code comments, specify the type of each step, describe the subtask, and reference the relevant sentence number from the context or provide logical reasons.
2, Step Type: Indicate whether the step is a [retrieval step] or a [logical step].
3, Retrieval Steps: Indicate all the related sentence number for retrieval with format [Sentence id], [Sentence id].
4, If the retrieved object involves comparison across several candidate sentences, you must NOT directly output the final answer to the retrieval. You need to make sure to list all relevant sentences before outputting the final retrieved objects.
5, Logical Steps: Provide the reason or logic behind the decision or action in the code.
6, Precision: Retain the full precision of the final result without rounding or truncating decimals.
7, Naming Conventions: Python variable names must not start with a number.)";

inline constexpr const char* kTopicRewriter =
    R"(You are a helpful assistant. Rewrite the context and the question according to the following task instruction and requirements.

Task instruction:
Given the context and question, replace the entities and important nouns in a different topic while keeping the numerical values unchanged.
Requirements:
1. Change the topic of the context. For example, if the current topic is the water consumption, change it to other topics such as the automobile factory or the medicine.
2. Replace important nouns, e.g. securities, issuance, equity compensation plans with general or new-topic-related nouns.
3. Maintain the numerical values unchanged.
4. Maintain the format and logic unchanged.
5. Ensure that every sentence is rewritten. Do not omit or hide any of them. The number of sentences in the output should match the number provided by the user, without omitting anyone.
6. Directly output the rewritten context and question within the tag <rewritten> and </rewritten>. Don't include unrelated information in within the tags.)";

inline constexpr const char* kLeakageJudge =
    "Given context A and context B, determine whether context B uses information from context A. Ignore table "
    "formats and sentence structures; If they share some similar important nouns, it can be considered that "
    "context B uses information from context A. Respond directly with Yes or No.";

inline constexpr const char* kCodeReminder =
    "Your previous reply did not contain a Python code block. Reply again with the complete solution enclosed "
    "within a code block that starts with the tag ```python and ends with the tag ```.";

inline constexpr const char* kRewriteFeedbackHeader =
    "Your rewrite did not satisfy the requirements. Fix the following problems and output the full rewrite again "
    "within the tag <rewritten> and </rewritten>:";

struct Demonstration {
  std::string input;
  std::string output;
};

/// Three-shot demonstrations for code-writing prompts. Synthetic, non-sensitive.
inline const std::vector<Demonstration>& code_demonstrations() {
  static const std::vector<Demonstration> demos = {
      {R"(Context:
[Sentence 0]: income was due primarily to the adoption of Statement of Position ...
[Sentence 7]: Equity securities of For the years ended December 31, 2017 is 24 .
[Sentence 9]: Equity securities of For the years ended December 31, 2016 is 22 .
[Sentence 11]: Equity securities of For the years ended December 31, 2015 is 17 .
[Sentence 13]: Mortgage loans of For the years ended December 31, 2017 is 124 .
[Sentence 15]: Mortgage loans of For the years ended December 31, 2016 is 116 .

Question: What is the growing rate of Mortgage loans in the year with the most Equity securities?)",
       R"(```python
# Step 1, [retrieval step] Retrieve all the related amounts of Equity securities
# evidence from the original context: [Sentence 7], [Sentence 9], [Sentence 11]
equity_securities_2017 = 24
equity_securities_2016 = 22
equity_securities_2015 = 17

# Step 2, [logical step] Determine which year has the most Equity securities amount
year_most_equity = 2017

# Step 3: [retrieval step] Retrieve the mortgage loans amount for the identified year 2017 and its previous year 2016.
# evidence from the original context: [Sentence 13], [Sentence 15]
mortgage_loans_2017 = 124
mortage_loans_2016 = 116

# Step 4: [logical step] Calculate the growth rate of mortgage loans in the year 2017.
# Growth Rate = (Current Year Amount - Previous Year Amount) / Previous Year Amount
growth_rate = (mortgage_loans_2017 - mortage_loans_2016) / mortage_loans_2016
```)"},
      {R"(Context:
[Sentence 0]: The aircraft fuel expense in 2018 is 9896 .
[Sentence 1]: Aircraft fuel expense as a percentage of total operating expenses in 2018 is 23.6 .
[Sentence 2]: The airline operated 944 aircraft at the end of 2018 .

Question: What were the total operating expenses in 2018?)",
       R"(```python
# Step 1, [retrieval step] Retrieve the aircraft fuel expense in 2018
# evidence from the original context: [Sentence 0]
fuel_expense_2018 = 9896

# Step 2, [retrieval step] Retrieve the share of fuel in total operating expenses
# evidence from the original context: [Sentence 1]
fuel_share_percent = 23.6

# Step 3, [logical step] Total = part / (percentage / 100)
total_operating_expenses = fuel_expense_2018 / (fuel_share_percent / 100)
```)"},
      {R"(Context:
[Sentence 0]: Net revenue of Q1 2019 is 1,250.5 .
[Sentence 1]: Net revenue of Q2 2019 is 1,310.0 .
[Sentence 2]: Net revenue of Q3 2019 is 1,402.7 .
[Sentence 3]: Headcount of Q3 2019 is 87 .

Question: What is the average net revenue over the first three quarters of 2019?)",
       R"(```python
# Step 1, [retrieval step] Retrieve net revenue for each of the three quarters
# evidence from the original context: [Sentence 0], [Sentence 1], [Sentence 2]
revenue_q1 = 1250.5
revenue_q2 = 1310.0
revenue_q3 = 1402.7

# Step 2, [logical step] The average is the sum divided by the number of quarters
average_revenue = (revenue_q1 + revenue_q2 + revenue_q3) / 3
```)"},
  };
  return demos;
}

/// In-context demonstration for the topic rewriter.
inline const Demonstration& rewriter_demonstration() {
  static const Demonstration demo = {
      R"(Context:
[Sentence 2]: Total benefits, claims and expenses increased $3.9 billion ... and due to increases in the Retail Products segment associated with the growth in the individual annuity and institutional investments businesses.
[Sentence 7]: Equity securities of For the years ended December 31, 2017 is 24 .
[Sentence 9]: Equity securities of For the years ended December 31, 2016 is 22 .
[Sentence 13]: Mortgage loans of For the years ended December 31, 2017 is 124 .
[Sentence 15]: Mortgage loans of For the years ended December 31, 2016 is 116 .
Question: What is the growing rate of Mortgage loans in the year with the most Equity securities?)",
      R"(<rewritten>
Context:
[Sentence 2]: Total expenditures, system failures, and maintenance costs increased by 3.9 billion ... and due to operational expansions in the Electric Vehicle Division to support growing demand in both rural and urban transportation markets.
[Sentence 7]: Robot units of For the years ended December 31, 2017 is 24 units.
[Sentence 9]: Robot units of For the years ended December 31, 2016 is 22 units.
[Sentence 13]: Vehicle units of For the years ended December 31, 2017 is 124 units.
[Sentence 15]: Vehicle units of For the years ended December 31, 2016 is 116 units.
Question: What is the growth rate of Vehicle units in the year with the most Robot units?
</rewritten>)"};
  return demo;
}

// Baseline collaboration prompts (hint / example strategies).

inline constexpr const char* kHintDescribe =
    "Describe the type of problem the question below asks you to solve, in one or two sentences. Do not copy "
    "sentences from the context and do not mention any numbers.";

inline constexpr const char* kHintAdvise =
    "A user is working on the following problem. Give a concise high-level hint describing the steps and formula "
    "needed to solve it. Do not solve it numerically.";

inline constexpr const char* kExampleRephrase =
    "Rephrase the context and question below as an analogous example about a different topic, concealing "
    "sensitive information: change the entities, important nouns and all numerical values. Output the example "
    "within the tag <rewritten> and </rewritten>.";

}  // namespace pcollab::prompts
