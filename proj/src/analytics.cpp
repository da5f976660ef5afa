#include "promptbench/analytics.hpp"

#include <cmath>
#include <map>
#include <set>

namespace promptbench {

std::size_t word_count(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

double ProblemSummary::avg_submissions_display() const { return std::round(avg_submissions * 10.0) / 10.0; }

double ProblemSummary::avg_submissions_solvers_display() const {
  return std::round(avg_submissions_solvers * 10.0) / 10.0;
}

long ProblemSummary::avg_words_display() const { return std::lround(avg_words); }

namespace {

struct SessionTally {
  std::size_t submissions = 0;
  std::optional<std::uint32_t> first_pass_index;
};

} // namespace

ProblemSummary summarize(const std::vector<SubmissionRecord>& log, const std::string& course_id,
                         const std::string& problem_id) {
  ProblemSummary s;
  s.course_id = course_id;
  s.problem_id = problem_id;

  std::map<std::string, SessionTally> sessions;
  std::size_t words = 0;
  for (const auto& r : log) {
    if (r.course_id != course_id || r.problem_id != problem_id) continue;
    auto& tally = sessions[r.session_id];
    ++tally.submissions;
    if (r.outcome.passed_all && (!tally.first_pass_index || r.submission_index < *tally.first_pass_index)) {
      tally.first_pass_index = r.submission_index;
    }
    words += word_count(r.student_text);
    ++s.total_submissions;
  }

  s.students_attempted = sessions.size();
  std::size_t solver_submissions = 0;
  for (const auto& [_, tally] : sessions) {
    if (tally.first_pass_index) {
      ++s.students_solved;
      solver_submissions += *tally.first_pass_index;
    }
  }
  if (s.students_attempted > 0) {
    s.avg_submissions = static_cast<double>(s.total_submissions) / static_cast<double>(s.students_attempted);
    s.avg_words = static_cast<double>(words) / static_cast<double>(s.total_submissions);
  }
  if (s.students_solved > 0) {
    s.avg_submissions_solvers = static_cast<double>(solver_submissions) / static_cast<double>(s.students_solved);
  }
  return s;
}

std::vector<SubmissionSeriesPoint> submission_series(const std::vector<SubmissionRecord>& log,
                                                     const std::string& course_id, const std::string& problem_id) {
  // index -> (submitters, word total)
  std::map<std::uint32_t, std::pair<std::size_t, std::size_t>> by_index;
  for (const auto& r : log) {
    if (r.course_id != course_id || r.problem_id != problem_id) continue;
    auto& [count, words] = by_index[r.submission_index];
    ++count;
    words += word_count(r.student_text);
  }
  std::vector<SubmissionSeriesPoint> series;
  if (by_index.empty()) return series;
  const auto max_index = by_index.rbegin()->first;
  for (std::uint32_t k = 1; k <= max_index; ++k) {
    SubmissionSeriesPoint point{k, 0, 0.0};
    if (const auto it = by_index.find(k); it != by_index.end()) {
      point.submitter_count = it->second.first;
      point.avg_words = static_cast<double>(it->second.second) / static_cast<double>(it->second.first);
    }
    series.push_back(point);
  }
  return series;
}

std::vector<std::string> problems_in_log(const std::vector<SubmissionRecord>& log, const std::string& course_id) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& r : log) {
    if (r.course_id == course_id && seen.insert(r.problem_id).second) out.push_back(r.problem_id);
  }
  return out;
}

nlohmann::json to_json(const ProblemSummary& s) {
  return {{"course_id", s.course_id},
          {"problem_id", s.problem_id},
          {"students_attempted", s.students_attempted},
          {"students_solved", s.students_solved},
          {"total_submissions", s.total_submissions},
          {"avg_submissions", s.avg_submissions_display()},
          {"avg_submissions_solvers", s.avg_submissions_solvers_display()},
          {"avg_words", s.avg_words_display()},
          {"avg_submissions_exact", s.avg_submissions},
          {"avg_submissions_solvers_exact", s.avg_submissions_solvers},
          {"avg_words_exact", s.avg_words}};
}

nlohmann::json to_json(const std::vector<SubmissionSeriesPoint>& series) {
  auto out = nlohmann::json::array();
  for (const auto& p : series) {
    out.push_back({{"submission_index", p.submission_index},
                   {"submitter_count", p.submitter_count},
                   {"avg_words", p.avg_words}});
  }
  return out;
}

} // namespace promptbench
