#pragma once

// Run support for the command-line tool: workspace file IO, article-directory
// loaders, and the Run context that owns the lockfile, the output list used
// for rollback, stage timings, and the manifest written on success.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "propdetect/corpus/corpus.hpp"

namespace propdetect::cli {

namespace fs = std::filesystem;

// Whole-file read; throws LoadError when the file is missing or unreadable.
std::string read_file(const fs::path& path);

// Atomic whole-file write: parent directories are created on demand, bytes go
// to a temporary sibling first, and a rename makes the content appear at once.
void write_file(const fs::path& path, std::string_view bytes);

// Loads every article<ID>.txt in a directory, sorted by id. Any other .txt
// name is an error: labelled corpora must keep ids recoverable.
std::vector<Article> load_article_dir(const fs::path& dir);

// Permissive variant for unlabelled pre-training text: article-named files
// keep their ids, every other .txt gets the next free id in filename order.
std::vector<Article> load_text_dir(const fs::path& dir);

// Fails with an actionable message naming the command that produces `path`.
void require_input(const fs::path& path, const std::string& what,
                   const std::string& fix);

// One command invocation against a workspace. Construction acquires the
// workspace lockfile; write_manifest() marks the run committed. If the Run
// dies uncommitted, every file it wrote is removed again so failed commands
// leave no partial outputs behind. The lock is always released.
class Run {
 public:
  Run(std::string command, fs::path workspace);
  ~Run();
  Run(const Run&) = delete;
  Run& operator=(const Run&) = delete;

  const fs::path& workspace() const { return ws_; }

  // Atomic write that is also recorded for rollback and manifest digests.
  void write_output(const fs::path& path, std::string_view bytes);

  // Writes `<artifact>.meta` with `# key = value` lines. Run metadata such as
  // seeds lives here, never inside the artifact itself.
  void write_sidecar(
      const fs::path& artifact,
      const std::vector<std::pair<std::string, std::string>>& entries);

  // Records one effective setting into the manifest's config snapshot.
  template <typename T>
  void config(const std::string& key, T&& value) {
    config_[key] = std::forward<T>(value);
  }

  // Runs `body` and records its wall-clock seconds under `name`.
  template <typename F>
  void stage(const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const std::chrono::duration<double> dt =
        std::chrono::steady_clock::now() - t0;
    stages_.emplace_back(name, dt.count());
  }

  // Writes manifests/<command>.json: config snapshot, tool version, stage
  // timings, and an FNV-1a digest per output file (detects accidental
  // post-run mutation; it is not tamper-proofing). Digests are computed
  // before the manifest itself is written, so the manifest lists every
  // other output but not itself.
  void write_manifest();

 private:
  std::string manifest_key(const fs::path& path) const;

  std::string command_;
  fs::path ws_;
  fs::path lock_path_;
  int lock_fd_ = -1;
  bool committed_ = false;
  nlohmann::json config_ = nlohmann::json::object();
  std::vector<std::pair<std::string, double>> stages_;
  std::vector<fs::path> outputs_;
};

}  // namespace propdetect::cli
