#pragma once

#include "promptbench/promptpipeline.hpp"
#include "promptbench/sandbox.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace promptbench {

// The persisted slice of a verdict (the raw run is not stored).
struct VerdictSummary {
  std::size_t test_index = 0;
  bool passed = false;
  std::string actual;
  std::string expected;
  OutcomeClass outcome_class = OutcomeClass::sandbox_error;

  bool operator==(const VerdictSummary&) const = default;
};

struct OutcomeSummary {
  bool passed_all = false;
  std::optional<std::size_t> first_failure;
  std::vector<VerdictSummary> verdicts;

  bool operator==(const OutcomeSummary&) const = default;
};

OutcomeSummary summarize_outcome(const EvaluationOutcome& outcome);

struct SubmissionRecord {
  std::string submission_id;
  std::string session_id;
  std::string course_id;
  std::string problem_id;
  std::uint32_t submission_index = 0;  // 1-based per (session, course, problem)
  std::string student_text;
  std::string rendered_prompt;
  std::vector<ModelResponse> responses;
  std::string extracted_source;
  int rejected_generations = 0;
  OutcomeSummary outcome;
  std::int64_t created_at = 0;         // UTC, milliseconds since epoch

  bool operator==(const SubmissionRecord&) const = default;
};

// One JSONL line (no trailing newline) and its inverse. Parsing throws
// Error{MalformedRecord}.
std::string record_to_jsonl(const SubmissionRecord& record);
SubmissionRecord record_from_jsonl(const std::string& line);

struct ProblemProgress {
  std::uint32_t attempt_count = 0;
  bool solved = false;
  std::optional<std::int64_t> solved_at;

  bool operator==(const ProblemProgress&) const = default;
};

struct SessionState {
  std::string session_id;
  // keyed by (course_id, problem_id)
  std::map<std::pair<std::string, std::string>, ProblemProgress> problems;

  bool operator==(const SessionState&) const = default;
};

// Where appended records are made durable.
class RecordSink {
public:
  virtual ~RecordSink() = default;
  // Must not return before the record is durable. Throws Error{StoreUnavailable}.
  virtual void persist(const SubmissionRecord& record) = 0;
};

// Appends each record as one fsync'd JSONL line.
class JsonlFileSink final : public RecordSink {
public:
  explicit JsonlFileSink(std::filesystem::path path);
  ~JsonlFileSink() override;

  JsonlFileSink(const JsonlFileSink&) = delete;
  JsonlFileSink& operator=(const JsonlFileSink&) = delete;

  void persist(const SubmissionRecord& record) override;

private:
  std::filesystem::path path_;
  int fd_ = -1;
};

// Append-only submission log with an in-memory index. Without a sink it is
// the in-memory store; open_jsonl() backs it with a JSONL file.
class SessionLog {
public:
  SessionLog() = default;
  explicit SessionLog(std::unique_ptr<RecordSink> sink);

  // Loads existing records from path (if present) and appends new ones to it.
  static std::unique_ptr<SessionLog> open_jsonl(const std::filesystem::path& path);

  // Precondition: record.submission_index == attempts so far + 1 for its
  // (session, course, problem); otherwise Error{IndexConflict}. Returns the
  // submission id.
  std::string append(SubmissionRecord record);

  [[nodiscard]] std::vector<SubmissionRecord> fetch_session(const std::string& session_id,
                                                            const std::string& course_id,
                                                            const std::string& problem_id) const;

  [[nodiscard]] std::uint32_t attempt_count(const std::string& session_id, const std::string& course_id,
                                            const std::string& problem_id) const;

  [[nodiscard]] SessionState session_state(const std::string& session_id) const;
  [[nodiscard]] std::vector<std::string> session_ids() const;

  // Consistent snapshot in append order.
  [[nodiscard]] std::vector<SubmissionRecord> records() const;

  // Records of one course as JSONL, ordered by created_at. Returns the count.
  std::size_t export_log(const std::string& course_id, std::ostream& out) const;
  // Every record, ordered by created_at.
  std::size_t export_all(std::ostream& out) const;

  // Appends every JSONL line from in (blank lines skipped), in submission
  // index order. Returns the count.
  std::size_t import_log(std::istream& in);

  [[nodiscard]] std::size_t size() const;

private:
  using Key = std::tuple<std::string, std::string, std::string>;

  void index_locked(std::shared_ptr<const SubmissionRecord> record);

  mutable std::mutex mutex_;
  std::unique_ptr<RecordSink> sink_;
  std::vector<std::shared_ptr<const SubmissionRecord>> records_;
  std::map<Key, std::vector<std::shared_ptr<const SubmissionRecord>>> by_attempt_;
  std::map<std::string, SessionState> sessions_;
  std::map<std::string, std::size_t> ids_;
};

// Fresh random identifier: 32 lowercase hex characters.
std::string random_id();

std::int64_t now_ms();

// Reads every record of a JSONL stream without touching any store.
std::vector<SubmissionRecord> read_jsonl(std::istream& in);

} // namespace promptbench
