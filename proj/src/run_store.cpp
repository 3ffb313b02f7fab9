#include "rehearsal/run_store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <fstream>

#include "rehearsal/errors.hpp"

namespace rehearsal {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

RunStore::RunStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) {
    std::filesystem::create_directories(path_.parent_path());
  }
}

void RunStore::append(const RunRecord& record) {
  std::string line = serialize_run(record);
  line += '\n';

  int fd = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
  if (fd < 0) {
    throw Error("cannot open run store for append: " + path_.string());
  }
  ::flock(fd, LOCK_EX);
  std::size_t written = 0;
  while (written < line.size()) {
    ssize_t n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      ::flock(fd, LOCK_UN);
      ::close(fd);
      throw Error("short write to run store: " + path_.string());
    }
    written += static_cast<std::size_t>(n);
  }
  ::flock(fd, LOCK_UN);
  ::close(fd);
}

std::vector<RunRecord> RunStore::load_all() const {
  std::vector<RunRecord> records;
  std::ifstream in(path_);
  if (!in) return records;  // absent store is an empty store
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    records.push_back(deserialize_run(line, line_number));
  }
  return records;
}

std::map<RunStore::Key, RunRecord> RunStore::load_latest() const {
  std::map<Key, RunRecord> latest;
  for (RunRecord& r : load_all()) {
    Key key{r.sample_id, r.method};
    latest.insert_or_assign(std::move(key), std::move(r));
  }
  return latest;
}

}  // namespace rehearsal
