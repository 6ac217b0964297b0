#include <gtest/gtest.h>

#include <chrono>
#include <future>
#include <sstream>

#include "pcollab/sandbox.hpp"

using namespace pcollab;

namespace {

ExecResult run(const std::string& code, int timeout_ms = 5000) {
  InProcessSandbox sb;
  return sb.execute({"t", code, timeout_ms, 256});
}

struct Case {
  const char* code;
  const char* stdout_text;
};

// Expected output captured from CPython 3.10 for each snippet.
const Case kPythonSemantics[] = {
    {"print(7 // -2, -7 % 3, 7.5 // 2, -7.5 % 2, divmod(-7, 2), divmod(7.5, -2))",
     "-4 2 3.0 0.5 (-4, 1) (-4.0, -0.5)\n"},
    {"print(round(2.5), round(3.5), round(-0.5), round(2.675, 2), round(1234, -2), round(1250, -2), round(0.125, 2))",
     "2 4 0 2.67 1200 1200 0.12\n"},
    {"print(10 / 4, 2 ** -1, 1e16, 1e-5, 0.1 + 0.2, 1 / 3, 2 ** 100, -2 ** 2, 5e-324, 123456789012345678.0)",
     "2.5 0.5 1e+16 1e-05 0.30000000000000004 0.3333333333333333 1267650600228229401496703205376 -4 5e-324 1.2345678901234568e+17\n"},
    {"print(f'{1234567.891:,.2f}|{0.256:.1%}|{42:>6}|{\"ab\":*^6}|{3.0}|{1e20}|{100:08.2f}|{-5:05d}|{255:#x}')",
     "1,234,567.89|25.6%|    42|**ab**|3.0|1e+20|00100.00|-0005|0xff\n"},
    {"print(f'{1e-7:g}', f'{12345678.0:g}', f'{1.0:.3}', format(0.5, '.0f'), format(1.5, '.0f'), f'{2.5:.0f}', f'{3.14159=:.2f}')",
     "1e-07 1.23457e+07 1.0 0 2 2 3.14159=3.14\n"},
    {"import math\nprint('%.3f and %5d and %s' % (math.pi, 42, [1, 'a']), '{} {:.2e} {name}'.format(1, 12345.678, name='z'), '%05.1f%%' % 12.345)",
     "3.142 and    42 and [1, 'a'] 1 1.23e+04 z 012.3%\n"},
    {"import math\nprint(math.sqrt(16), math.floor(-2.5), math.ceil(2.1), math.log(100, 10), math.isclose(0.1 + 0.2, 0.3), math.prod([1, 2, 3]), math.exp(1), math.log10(1000))",
     "4.0 -3 3 2.0 True 6 2.718281828459045 3.0\n"},
    {"d = {'a': 1, 'b': 2}\nd['c'] = d.get('a', 0) + 5\nprint(d, list(d.items()), [k for k, v in d.items() if v > 1], {1: 2.0}, sorted(d, reverse=True))",
     "{'a': 1, 'b': 2, 'c': 6} [('a', 1), ('b', 2), ('c', 6)] ['b', 'c'] {1: 2.0} ['c', 'b', 'a']\n"},
    {"xs = [3, 1, 2.5, -7]\nprint(sorted(xs), sum(xs), max(xs), min(xs, key=abs), sum([0.1] * 10), abs(-3.5), list(reversed(xs)))",
     "[-7, 1, 2.5, 3] -0.5 3 1 0.9999999999999999 3.5 [-7, 2.5, 1, 3]\n"},
    {"t = (1, 2)\nprint(t[::-1], 'abcdef'[1:4], [1, 2, 3, 4][-2:], [0] * 3, (1,) * 2, 'x' * 3, 3 in range(1, 5, 2), True + 1, (1,), ())",
     "(2, 1) bcd [3, 4] [0, 0, 0] (1, 1) xxx True 2 (1,) ()\n"},
    {"print(int('42'), float('1.5'), int(-3.9), str(1.0), bool([]), pow(2, 5), 10 ** 20, float('1e3'), int(' -7 '), 1_000_000, 0x1f, 1.5e3)",
     "42 1.5 -3 1.0 False 32 100000000000000000000 1000.0 -7 1000000 31 1500.0\n"},
    {"print(1 < 2 < 3, 1 < 3 < 2, [] or 'e', 2 and 3, not 0, None is None, 1 == 1.0, 'a' < 'b', [1, 2] < [1, 3], 0.1 * 3)",
     "True False e 3 True True True True True 0.30000000000000004\n"},
    {"print(100 * 1.1, 3 * 0.1, 1e22, 1e-4, 0.0001234, 123456789.123, -0.0, 2.0 ** 0.5, 7 / 7, 1e15 + 0.3)",
     "110.00000000000001 0.30000000000000004 1e+22 0.0001 0.0001234 123456789.123 -0.0 1.4142135623730951 1.0 1000000000000000.2\n"},
    {"a = [5, 3, 8]\na.sort()\nb = a.copy()\nb.append(1)\nprint(a, b, a.index(8), b.count(1), a.pop(0), a, len('h\u00e9llo'.encode()) if False else 0)",
     "[5, 8] [3, 5, 8, 1] 2 1 3 [5, 8] 0\n"},
    {"s = 0\nfor i in range(10):\n    if i % 3 == 0:\n        continue\n    if i > 7:\n        break\n    s += i\nelse:\n    s = -1\nprint(s)",
     "19\n"},
    {"def f(n, acc=1):\n    return acc if n <= 1 else f(n - 1, acc * n)\nprint(f(20), f(5, acc=2), [i * i for i in range(6) if i % 2], list(zip('ab', [1, 2])), list(enumerate([5, 6], 1)))",
     "2432902008176640000 240 [1, 9, 25] [('a', 1), ('b', 2)] [(1, 5), (2, 6)]\n"},
    {"x = 0.06896551724137931\nprint(round(x, 5), round(x * 100, 2), f'{x:.4f}', '%.2f%%' % (x * 100), x)",
     "0.06897 6.9 0.0690 6.90% 0.06896551724137931\n"},
    {"print(round(-2.5), round(0.5), round(1.005, 2), round(-1.25, 1), round(2.5, 0), round(15, -1), round(25, -1), round(-35, -1))",
     "-2 0 1.0 -1.2 2.0 20 20 -40\n"}
};

SubprocessSandbox::Options stub(std::vector<std::string> extra = {}) {
  SubprocessSandbox::Options o;
  o.argv = {PCOLLAB_STUB_WORKER};
  o.argv.insert(o.argv.end(), extra.begin(), extra.end());
  o.pool_size = 4;
  o.grace_ms = 300;
  return o;
}

}  // namespace

TEST(Sandbox, GrowthRateSnippet) {
  auto r = run("growth_rate = (124 - 116) / 116");
  ASSERT_TRUE(r.ok()) << r.error;
  EXPECT_EQ(*r.answer, "0.06896551724137931");
  EXPECT_EQ(r.decimal_answer()->rounded(5).to_string(), "0.06897");
}

TEST(Sandbox, SyntaxErrorIsReported) {
  auto r = run("x = (");
  EXPECT_EQ(r.status, ExecStatus::Error);
  EXPECT_NE(r.error.find("SyntaxError"), std::string::npos);
  EXPECT_FALSE(r.answer);
}

TEST(Sandbox, InfiniteLoopTimesOutWithinBudget) {
  const auto t0 = std::chrono::steady_clock::now();
  auto r = run("while True: pass", 1000);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(r.status, ExecStatus::Timeout);
  EXPECT_LT(ms, 2000);
}

TEST(Sandbox, DeniesSystemAccess) {
  for (const char* code : {"f = open('/etc/passwd')\nans = 1", "import os\nans = 1", "import socket", "from subprocess import run",
                           "import requests", "x = __import__('os')", "eval('1+1')", "ans = (1).__class__"}) {
    auto r = run(code);
    EXPECT_EQ(r.status, ExecStatus::Error) << code;
    EXPECT_FALSE(r.answer) << code;
  }
  EXPECT_NE(run("import numpy").error.find("ModuleNotFoundError"), std::string::npos);
}

TEST(Sandbox, AnswerSelection) {
  EXPECT_EQ(*run("ans = 3\nx = 4").answer, "3");
  EXPECT_EQ(*run("x = 4\ny = x * 2.5\nprint(y)").answer, "10");
  EXPECT_EQ(*run("def f():\n    z = 1\n    return z\nr = f() + 1\nf()").answer, "2");
  EXPECT_EQ(*run("print(1.25)").answer, "1.25");
  EXPECT_EQ(*run("ans = '42.50'").answer, "42.50");
  EXPECT_EQ(run("ans = True").status, ExecStatus::Error);
  EXPECT_EQ(run("ans = 'n/a'").status, ExecStatus::Error);
  EXPECT_EQ(run("ans = float('inf')").status, ExecStatus::Error);
  EXPECT_EQ(run("print('hello')").status, ExecStatus::Error);
  EXPECT_EQ(run("x = 1 / 0").status, ExecStatus::Error);
}

TEST(Sandbox, ResourceCaps) {
  EXPECT_NE(run("a = [0] * 100000000").error.find("MemoryError"), std::string::npos);
  EXPECT_NE(run("def g(n):\n    return g(n + 1)\nans = g(0)").error.find("RecursionError"), std::string::npos);
  EXPECT_NE(run("ans = 2 ** 200").error.find("OverflowError"), std::string::npos);
}

TEST(Sandbox, MatchesCPythonOutput) {
  for (const auto& c : kPythonSemantics) {
    auto r = run(std::string(c.code) + "\nans = 0");
    ASSERT_TRUE(r.ok()) << c.code << "\n" << r.error;
    EXPECT_EQ(r.stdout_text, c.stdout_text) << c.code;
  }
}

TEST(Sandbox, Deterministic) {
  const std::string code = "import math\nxs = [math.sqrt(i) for i in range(50)]\nans = sum(xs) / len(xs)";
  EXPECT_EQ(run(code).to_json(), run(code).to_json());
}

TEST(Sandbox, ProtocolJsonRoundTrip) {
  ExecResult r = run("ans = 7 / 2");
  EXPECT_EQ(ExecResult::from_json(r.to_json()).to_json(), r.to_json());
  auto bad = ExecResult::from_json({{"id", "x"}, {"status", "ok"}, {"answer", nullptr}});
  EXPECT_EQ(bad.status, ExecStatus::Error);
}

TEST(WorkerProtocol, ServesOneLinePerRequest) {
  std::istringstream in(R"({"id":"a","code":"ans = 1 + 1"}
{"id":"b","code":"x = ("}
not json
)");
  std::ostringstream out;
  serve_worker(in, out);
  std::istringstream lines(out.str());
  std::string line;
  std::vector<nlohmann::json> replies;
  while (std::getline(lines, line)) replies.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(replies.size(), 3u);
  EXPECT_EQ(replies[0]["id"], "a");
  EXPECT_EQ(replies[0]["answer"], "2");
  EXPECT_EQ(replies[1]["status"], "error");
  EXPECT_EQ(replies[2]["status"], "error");
}

TEST(SubprocessSandbox, HundredConcurrentIdsThroughPoolOfFour) {
  SubprocessSandbox sb(stub());
  std::vector<std::future<ExecResult>> futures;
  for (int i = 0; i < 100; ++i) {
    futures.push_back(std::async(std::launch::async, [&sb, i] {
      return sb.execute({"req-" + std::to_string(i), "ans = " + std::to_string(i) + " * 3", 5000, 256});
    }));
  }
  for (int i = 0; i < 100; ++i) {
    auto r = futures[static_cast<std::size_t>(i)].get();
    ASSERT_TRUE(r.ok()) << r.error;
    EXPECT_EQ(r.id, "req-" + std::to_string(i));
    EXPECT_EQ(*r.answer, std::to_string(i * 3));
  }
  EXPECT_EQ(sb.spawned(), 100u);
}

TEST(SubprocessSandbox, WorkerTimeoutAndWatchdog) {
  SubprocessSandbox sb(stub());
  auto r = sb.execute({"loop", "while True: pass", 1000, 256});
  EXPECT_EQ(r.status, ExecStatus::Timeout);

  SubprocessSandbox hung(stub({"--hang"}));
  const auto t0 = std::chrono::steady_clock::now();
  auto h = hung.execute({"hang", "ans = 1", 500, 256});
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(h.status, ExecStatus::Timeout);
  EXPECT_LT(ms, 2000);
}

TEST(SubprocessSandbox, CrashedOrMissingWorkerIsAnError) {
  SubprocessSandbox crash(stub({"--crash"}));
  EXPECT_EQ(crash.execute({"c", "ans = 1", 1000, 256}).status, ExecStatus::Error);
  SubprocessSandbox::Options o;
  o.argv = {"/nonexistent/worker"};
  SubprocessSandbox missing(o);
  EXPECT_EQ(missing.execute({"m", "ans = 1", 1000, 256}).status, ExecStatus::Error);
}
