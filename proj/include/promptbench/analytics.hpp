#pragma once

#include "promptbench/sessionlog.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace promptbench {

// Number of maximal runs of non-whitespace characters.
std::size_t word_count(std::string_view text);

struct ProblemSummary {
  std::string course_id;
  std::string problem_id;
  std::size_t students_attempted = 0;
  std::size_t students_solved = 0;
  std::size_t total_submissions = 0;
  // Mean submissions over every attempting session.
  double avg_submissions = 0.0;
  // Mean submissions up to and including the first pass, over solvers only.
  double avg_submissions_solvers = 0.0;
  // Mean word count over all submissions.
  double avg_words = 0.0;

  // Display rounding: one decimal for submissions, whole words.
  [[nodiscard]] double avg_submissions_display() const;
  [[nodiscard]] double avg_submissions_solvers_display() const;
  [[nodiscard]] long avg_words_display() const;
};

struct SubmissionSeriesPoint {
  std::uint32_t submission_index = 0;  // 1-based
  std::size_t submitter_count = 0;
  double avg_words = 0.0;

  bool operator==(const SubmissionSeriesPoint&) const = default;
};

// Zero summary when the log has no records for the problem.
ProblemSummary summarize(const std::vector<SubmissionRecord>& log, const std::string& course_id,
                         const std::string& problem_id);

// Point k aggregates the k-th submission of every session that made one.
std::vector<SubmissionSeriesPoint> submission_series(const std::vector<SubmissionRecord>& log,
                                                     const std::string& course_id, const std::string& problem_id);

// Problem ids of a course in order of first appearance in the log.
std::vector<std::string> problems_in_log(const std::vector<SubmissionRecord>& log, const std::string& course_id);

nlohmann::json to_json(const ProblemSummary& summary);
nlohmann::json to_json(const std::vector<SubmissionSeriesPoint>& series);

} // namespace promptbench
