#pragma once

#include "promptbench/codefilter.hpp"
#include "promptbench/problem.hpp"
#include "promptbench/sessionlog.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path source_dir() { return PROMPTBENCH_SOURCE_DIR; }
inline fs::path courses_dir() { return source_dir() / "courses"; }

class TempDir {
public:
  TempDir() {
    std::string pattern = (fs::temp_directory_path() / "promptbench-test-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// Minimal valid problem directory.
inline void write_problem(const fs::path& root, const std::string& id, const nlohmann::json& tests,
                          const nlohmann::json& filter = {{"disallowed", nlohmann::json::array()}},
                          const std::string& kind = "program",
                          const std::string& prefix = "Write a Python program that") {
  nlohmann::json problem = {{"title", id},
                            {"scaffold", {{"kind", kind}, {"prefix", prefix}}},
                            {"assets", {"demo.gif"}},
                            {"filter", filter}};
  write_file(root / id / "problem.json", problem.dump(2));
  write_file(root / id / "tests.json", tests.dump(2));
  write_file(root / id / "assets" / "demo.gif", "GIF89a");
}

inline void write_manifest(const fs::path& root, const std::string& id, const std::vector<std::string>& problems) {
  write_file(root / "course.json", nlohmann::json{{"id", id}, {"title", id}, {"problems", problems}}.dump(2));
}

inline nlohmann::json stdio_test(const std::string& in, const std::string& expected) {
  return {{"kind", "stdio"}, {"stdin", in}, {"expected", expected}};
}

inline std::string random_bytes(std::mt19937& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> byte(0, 255);
  std::string s(len(rng), '\0');
  for (auto& c : s) c = static_cast<char>(byte(rng));
  return s;
}

// Biased toward Python-looking text so the lexer's string/comment paths get
// exercised, not just operator fallbacks.
inline std::string random_source(std::mt19937& rng, std::size_t pieces) {
  static const std::vector<std::string> kPieces = {
      "while", "lambda", "for", "x", " ", "  ", "\n", "\r\n", "\t", "'", "\"", "'''", "\"\"\"", "#", "\\",
      "r'", "f\"", "b'", "1.5e-3", "0x1F", "=", "==", "(", ")", ":", "print", "é", "\xff", "\xc3", "**="};
  std::uniform_int_distribution<std::size_t> pick(0, kPieces.size() - 1);
  std::string s;
  for (std::size_t i = 0; i < pieces; ++i) s += kPieces[pick(rng)];
  return s;
}

// True when source ends inside an unterminated string whose last character
// is an escaping backslash: anything appended then continues that string,
// and a quote in the appended text closes it. Appending text "inside a
// string" is not well defined for such sources.
inline bool ends_in_escaped_open_string(std::string_view source) {
  const auto tokens = promptbench::lex(source);
  if (tokens.empty() || tokens.back().kind != promptbench::TokenKind::string_literal) return false;
  const auto& lexeme = tokens.back().lexeme;
  std::size_t backslashes = 0;
  for (auto it = lexeme.rbegin(); it != lexeme.rend() && *it == '\\'; ++it) ++backslashes;
  return backslashes % 2 == 1;
}

inline std::string join_lexemes(const std::vector<promptbench::Token>& tokens) {
  std::string out;
  for (const auto& t : tokens) out += t.lexeme;
  return out;
}

// Naive statistics straight from raw records, sharing no code with the
// analytics module.
struct NaiveStats {
  std::size_t attempted = 0;
  std::size_t solved = 0;
  double avg_submissions = 0;
  double avg_words = 0;
  std::vector<std::pair<std::size_t, double>> series;  // (submitters, avg words) for k = 1..max
};

inline std::size_t naive_words(const std::string& text) {
  std::istringstream in(text);
  std::string w;
  std::size_t n = 0;
  while (in >> w) ++n;
  return n;
}

inline NaiveStats naive_recount(const std::vector<promptbench::SubmissionRecord>& log, const std::string& course,
                                const std::string& problem) {
  NaiveStats s;
  std::vector<std::string> sessions;
  std::size_t total = 0, words = 0;
  std::uint32_t max_index = 0;
  for (const auto& r : log) {
    if (r.course_id != course || r.problem_id != problem) continue;
    if (std::find(sessions.begin(), sessions.end(), r.session_id) == sessions.end()) sessions.push_back(r.session_id);
    ++total;
    words += naive_words(r.student_text);
    max_index = std::max(max_index, r.submission_index);
  }
  s.attempted = sessions.size();
  for (const auto& sid : sessions) {
    for (const auto& r : log) {
      if (r.course_id == course && r.problem_id == problem && r.session_id == sid && r.outcome.passed_all) {
        ++s.solved;
        break;
      }
    }
  }
  if (total > 0) {
    s.avg_submissions = double(total) / double(s.attempted);
    s.avg_words = double(words) / double(total);
  }
  for (std::uint32_t k = 1; k <= max_index; ++k) {
    std::size_t n = 0, w = 0;
    for (const auto& r : log) {
      if (r.course_id == course && r.problem_id == problem && r.submission_index == k) {
        ++n;
        w += naive_words(r.student_text);
      }
    }
    s.series.emplace_back(n, n ? double(w) / double(n) : 0.0);
  }
  return s;
}

// Random well-formed log: up to max_sessions sessions (exactly that many,
// each attempting every problem, when exact_sessions is set), each with up to
// max_subs submissions per problem. Some sessions pass on their last
// submission and possibly earlier ones too.
inline std::vector<promptbench::SubmissionRecord> random_log(std::mt19937& rng, std::size_t max_sessions,
                                                             std::size_t max_subs, const std::string& course,
                                                             const std::vector<std::string>& problems,
                                                             bool exact_sessions = false) {
  static const std::vector<std::string> kWords = {"write", "a", "program", "that", "reads", "numbers,", "prints",
                                                  "the", "average", "2dp.", "and", "then"};
  std::vector<promptbench::SubmissionRecord> log;
  std::uniform_int_distribution<std::size_t> n_sessions(0, max_sessions);
  std::uniform_int_distribution<std::size_t> n_subs(1, max_subs);
  std::uniform_int_distribution<std::size_t> n_words(0, 30);
  std::uniform_int_distribution<std::size_t> word(0, kWords.size() - 1);
  std::bernoulli_distribution coin(0.5);
  std::int64_t clock = 1'700'000'000'000;
  const auto sessions = exact_sessions ? max_sessions : n_sessions(rng);
  for (std::size_t s = 0; s < sessions; ++s) {
    for (const auto& problem : problems) {
      if (!exact_sessions && !coin(rng)) continue;
      const auto subs = n_subs(rng);
      const bool solves = coin(rng);
      for (std::size_t k = 1; k <= subs; ++k) {
        promptbench::SubmissionRecord r;
        r.submission_id = promptbench::random_id();
        r.session_id = "session-" + std::to_string(s);
        r.course_id = course;
        r.problem_id = problem;
        r.submission_index = static_cast<std::uint32_t>(k);
        const auto words = n_words(rng);
        for (std::size_t w = 0; w < words; ++w) r.student_text += (w ? (coin(rng) ? " " : "\n  ") : "") + kWords[word(rng)];
        r.outcome.passed_all = solves && (k == subs || coin(rng));
        if (!r.outcome.passed_all) r.outcome.first_failure = 0;
        r.created_at = clock++;
        log.push_back(std::move(r));
      }
    }
  }
  std::shuffle(log.begin(), log.end(), rng);
  return log;
}

} // namespace testsupport
