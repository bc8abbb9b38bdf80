#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "dualview/corpus.hpp"

namespace testing {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(DUALVIEW_SOURCE_DIR); }
inline fs::path fixtures_dir() { return source_dir() / "fixtures"; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("dualview-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void spit(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline dualview::Document doc(const std::string& id, const std::string& text) { return {id, text}; }

// Record with `n_instr` instruction negatives and `n_hard` hard negatives;
// doc ids are prefixed with the record id so pools never collide.
inline dualview::InstructTriplet make_triplet(const std::string& id, std::size_t n_instr, std::size_t n_hard,
                                              bool is_instruct = true) {
  dualview::InstructTriplet t;
  t.record_id = id;
  t.query = "query about " + id;
  t.instruction = is_instruct ? "only documents matching facet zero of " + id : "";
  t.is_instruct = is_instruct;
  t.positive = doc(id + "-pos", "positive text for " + id + " facet zero");
  for (std::size_t i = 0; i < n_instr; ++i)
    t.instruction_negatives.push_back(
        doc(id + "-in" + std::to_string(i), "instruction negative " + std::to_string(i) + " of " + id));
  for (std::size_t i = 0; i < n_hard; ++i)
    t.hard_negatives.push_back(doc(id + "-hn" + std::to_string(i), "hard negative " + std::to_string(i) + " of " + id));
  return t;
}

}  // namespace testing
