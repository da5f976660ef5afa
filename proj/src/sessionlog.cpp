#include "promptbench/sessionlog.hpp"

#include "promptbench/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <unistd.h>

namespace promptbench {

using nlohmann::json;
using nlohmann::ordered_json;

OutcomeSummary summarize_outcome(const EvaluationOutcome& outcome) {
  OutcomeSummary summary;
  summary.passed_all = outcome.passed_all;
  summary.first_failure = outcome.first_failure;
  for (const auto& v : outcome.verdicts) {
    summary.verdicts.push_back({v.test_index, v.passed, v.actual, v.expected, v.run.outcome_class});
  }
  return summary;
}

std::string record_to_jsonl(const SubmissionRecord& r) {
  ordered_json responses = ordered_json::array();
  for (const auto& m : r.responses) {
    responses.push_back({{"raw_text", m.raw_text},
                         {"model_id", m.model_id},
                         {"variant_index", m.variant_index},
                         {"latency_ms", m.latency_ms}});
  }
  ordered_json verdicts = ordered_json::array();
  for (const auto& v : r.outcome.verdicts) {
    verdicts.push_back({{"test_index", v.test_index},
                        {"passed", v.passed},
                        {"actual", v.actual},
                        {"expected", v.expected},
                        {"outcome_class", std::string(to_string(v.outcome_class))}});
  }
  ordered_json outcome = {{"passed_all", r.outcome.passed_all},
                          {"first_failure", nullptr},
                          {"verdicts", std::move(verdicts)}};
  if (r.outcome.first_failure) outcome["first_failure"] = *r.outcome.first_failure;

  const ordered_json doc = {{"submission_id", r.submission_id},
                            {"session_id", r.session_id},
                            {"course_id", r.course_id},
                            {"problem_id", r.problem_id},
                            {"submission_index", r.submission_index},
                            {"student_text", r.student_text},
                            {"rendered_prompt", r.rendered_prompt},
                            {"responses", std::move(responses)},
                            {"extracted_source", r.extracted_source},
                            {"rejected_generations", r.rejected_generations},
                            {"outcome", std::move(outcome)},
                            {"created_at", r.created_at}};
  return doc.dump(-1, ' ', false, json::error_handler_t::replace);
}

SubmissionRecord record_from_jsonl(const std::string& line) {
  try {
    const json doc = json::parse(line);
    SubmissionRecord r;
    r.submission_id = doc.at("submission_id").get<std::string>();
    r.session_id = doc.at("session_id").get<std::string>();
    r.course_id = doc.at("course_id").get<std::string>();
    r.problem_id = doc.at("problem_id").get<std::string>();
    r.submission_index = doc.at("submission_index").get<std::uint32_t>();
    r.student_text = doc.at("student_text").get<std::string>();
    r.rendered_prompt = doc.at("rendered_prompt").get<std::string>();
    for (const auto& m : doc.at("responses")) {
      r.responses.push_back({m.at("raw_text").get<std::string>(), m.at("model_id").get<std::string>(),
                             m.at("latency_ms").get<std::int64_t>(), m.at("variant_index").get<int>()});
    }
    r.extracted_source = doc.at("extracted_source").get<std::string>();
    r.rejected_generations = doc.at("rejected_generations").get<int>();
    const auto& outcome = doc.at("outcome");
    r.outcome.passed_all = outcome.at("passed_all").get<bool>();
    if (!outcome.at("first_failure").is_null()) {
      r.outcome.first_failure = outcome.at("first_failure").get<std::size_t>();
    }
    for (const auto& v : outcome.at("verdicts")) {
      r.outcome.verdicts.push_back({v.at("test_index").get<std::size_t>(), v.at("passed").get<bool>(),
                                    v.at("actual").get<std::string>(), v.at("expected").get<std::string>(),
                                    outcome_class_from_string(v.at("outcome_class").get<std::string>())});
    }
    r.created_at = doc.at("created_at").get<std::int64_t>();
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, fmt::format("bad log record: {}", e.what()));
  }
}

std::string random_id() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  return fmt::format("{:016x}{:016x}", rng(), rng());
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::vector<SubmissionRecord> read_jsonl(std::istream& in) {
  std::vector<SubmissionRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(record_from_jsonl(line));
  }
  return out;
}

JsonlFileSink::JsonlFileSink(std::filesystem::path path) : path_(std::move(path)) {
  std::error_code ec;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path(), ec);
  if (ec) throw Error(Errc::StoreUnavailable, fmt::format("cannot create {}: {}", path_.parent_path().string(), ec.message()));
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(Errc::StoreUnavailable, fmt::format("cannot open {}: {}", path_.string(), std::strerror(errno)));
  }
}

JsonlFileSink::~JsonlFileSink() {
  if (fd_ >= 0) ::close(fd_);
}

void JsonlFileSink::persist(const SubmissionRecord& record) {
  const std::string line = record_to_jsonl(record) + "\n";
  std::size_t done = 0;
  while (done < line.size()) {
    const auto n = ::write(fd_, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::StoreUnavailable, fmt::format("write to {} failed: {}", path_.string(), std::strerror(errno)));
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0) {
    throw Error(Errc::StoreUnavailable, fmt::format("fsync of {} failed: {}", path_.string(), std::strerror(errno)));
  }
}

SessionLog::SessionLog(std::unique_ptr<RecordSink> sink) : sink_(std::move(sink)) {}

std::unique_ptr<SessionLog> SessionLog::open_jsonl(const std::filesystem::path& path) {
  auto log = std::make_unique<SessionLog>();
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::StoreUnavailable, fmt::format("cannot read {}", path.string()));
    log->import_log(in);
  }
  log->sink_ = std::make_unique<JsonlFileSink>(path);
  return log;
}

void SessionLog::index_locked(std::shared_ptr<const SubmissionRecord> record) {
  ids_[record->submission_id] = records_.size();
  auto& state = sessions_[record->session_id];
  state.session_id = record->session_id;
  auto& progress = state.problems[{record->course_id, record->problem_id}];
  progress.attempt_count = record->submission_index;
  if (record->outcome.passed_all && !progress.solved) {
    progress.solved = true;
    progress.solved_at = record->created_at;
  }
  by_attempt_[{record->session_id, record->course_id, record->problem_id}].push_back(record);
  records_.push_back(std::move(record));
}

std::string SessionLog::append(SubmissionRecord record) {
  if (record.submission_id.empty()) record.submission_id = random_id();
  std::lock_guard lock(mutex_);
  const Key key{record.session_id, record.course_id, record.problem_id};
  const auto it = by_attempt_.find(key);
  const std::size_t count = it == by_attempt_.end() ? 0 : it->second.size();
  if (record.submission_index != count + 1) {
    throw Error(Errc::IndexConflict,
                fmt::format("submission index {} for {}/{}/{} but {} attempts are recorded", record.submission_index,
                            record.session_id, record.course_id, record.problem_id, count));
  }
  if (ids_.count(record.submission_id) > 0) {
    throw Error(Errc::IndexConflict, fmt::format("submission id {} already recorded", record.submission_id));
  }
  if (sink_) sink_->persist(record);
  auto stored = std::make_shared<const SubmissionRecord>(std::move(record));
  index_locked(stored);
  return stored->submission_id;
}

std::vector<SubmissionRecord> SessionLog::fetch_session(const std::string& session_id, const std::string& course_id,
                                                        const std::string& problem_id) const {
  std::lock_guard lock(mutex_);
  std::vector<SubmissionRecord> out;
  const auto it = by_attempt_.find({session_id, course_id, problem_id});
  if (it == by_attempt_.end()) return out;
  for (const auto& r : it->second) out.push_back(*r);
  return out;
}

std::uint32_t SessionLog::attempt_count(const std::string& session_id, const std::string& course_id,
                                        const std::string& problem_id) const {
  std::lock_guard lock(mutex_);
  const auto it = by_attempt_.find({session_id, course_id, problem_id});
  return it == by_attempt_.end() ? 0 : static_cast<std::uint32_t>(it->second.size());
}

SessionState SessionLog::session_state(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return SessionState{session_id, {}};
  return it->second;
}

std::vector<std::string> SessionLog::session_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

std::vector<SubmissionRecord> SessionLog::records() const {
  std::lock_guard lock(mutex_);
  std::vector<SubmissionRecord> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(*r);
  return out;
}

namespace {

std::size_t write_sorted(std::vector<SubmissionRecord> records, std::ostream& out) {
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.created_at < b.created_at; });
  for (const auto& r : records) out << record_to_jsonl(r) << '\n';
  return records.size();
}

} // namespace

std::size_t SessionLog::export_log(const std::string& course_id, std::ostream& out) const {
  auto all = records();
  std::erase_if(all, [&](const SubmissionRecord& r) { return r.course_id != course_id; });
  return write_sorted(std::move(all), out);
}

std::size_t SessionLog::export_all(std::ostream& out) const { return write_sorted(records(), out); }

std::size_t SessionLog::import_log(std::istream& in) {
  auto records = read_jsonl(in);
  // Exports are ordered by timestamp, which a clock step can put out of
  // index order; replaying by index keeps every append dense.
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.submission_index < b.submission_index; });
  std::size_t count = 0;
  for (auto& record : records) {
    append(std::move(record));
    ++count;
  }
  return count;
}

std::size_t SessionLog::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

} // namespace promptbench
