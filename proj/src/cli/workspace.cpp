#include "workspace.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "propdetect/util/errors.hpp"
#include "propdetect/util/fnv.hpp"
#include "propdetect/util/utf8.hpp"
#include "propdetect/version.hpp"

namespace propdetect::cli {
namespace {

// article<digits>.txt — the strict corpus naming scheme.
bool is_article_name(const std::string& name) {
  constexpr std::string_view prefix = "article";
  constexpr std::string_view suffix = ".txt";
  if (name.size() <= prefix.size() + suffix.size()) return false;
  if (name.compare(0, prefix.size(), prefix) != 0) return false;
  if (name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
    return false;
  for (size_t i = prefix.size(); i < name.size() - suffix.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return false;
  return true;
}

std::vector<fs::path> sorted_txt_files(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw LoadError("article directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw LoadError("no .txt files in '" + dir.string() + "'");
  return files;
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw LoadError("cannot read '" + path.string() + "'");
  return std::move(buf).str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp~";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw LoadError("cannot create '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw LoadError("cannot write '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw LoadError("cannot move '" + tmp.string() + "' into place");
  }
}

std::vector<Article> load_article_dir(const fs::path& dir) {
  std::vector<Article> out;
  for (const auto& file : sorted_txt_files(dir))
    out.push_back(load_article(file.filename().string(), read_file(file)));
  std::sort(out.begin(), out.end(),
            [](const Article& a, const Article& b) { return a.id < b.id; });
  return out;
}

std::vector<Article> load_text_dir(const fs::path& dir) {
  std::vector<Article> out;
  std::vector<fs::path> extras;
  for (const auto& file : sorted_txt_files(dir)) {
    const std::string name = file.filename().string();
    if (is_article_name(name))
      out.push_back(load_article(name, read_file(file)));
    else
      extras.push_back(file);
  }
  int64_t next_id = 0;
  for (const Article& a : out) next_id = std::max(next_id, a.id);
  for (const auto& file : extras)
    out.push_back(Article{++next_id, utf8_decode(read_file(file))});
  std::sort(out.begin(), out.end(),
            [](const Article& a, const Article& b) { return a.id < b.id; });
  return out;
}

void require_input(const fs::path& path, const std::string& what,
                   const std::string& fix) {
  if (!fs::exists(path))
    throw LoadError("missing " + what + " '" + path.string() + "'; " + fix);
}

Run::Run(std::string command, fs::path workspace)
    : command_(std::move(command)), ws_(std::move(workspace)) {
  fs::create_directories(ws_);
  lock_path_ = ws_ / ".lock";
  lock_fd_ = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (lock_fd_ < 0)
    throw LoadError("workspace '" + ws_.string() +
                    "' is locked by another run; remove '" +
                    lock_path_.string() + "' if that run is gone");
  const std::string note =
      "pid " + std::to_string(::getpid()) + " command " + command_ + "\n";
  // Informational only; lock semantics come from O_EXCL creation.
  (void)!::write(lock_fd_, note.data(), note.size());
}

Run::~Run() {
  if (!committed_) {
    for (const fs::path& p : outputs_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
  if (lock_fd_ >= 0) {
    ::close(lock_fd_);
    std::error_code ec;
    fs::remove(lock_path_, ec);
  }
}

void Run::write_output(const fs::path& path, std::string_view bytes) {
  write_file(path, bytes);
  if (std::find(outputs_.begin(), outputs_.end(), path) == outputs_.end())
    outputs_.push_back(path);
}

void Run::write_sidecar(
    const fs::path& artifact,
    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string text = "# command = " + command_ + "\n# version = " +
                     std::string(kVersion) + "\n";
  for (const auto& [key, value] : entries)
    text += "# " + key + " = " + value + "\n";
  write_output(artifact.string() + ".meta", text);
}

std::string Run::manifest_key(const fs::path& path) const {
  const fs::path abs = fs::absolute(path).lexically_normal();
  const fs::path base = fs::absolute(ws_).lexically_normal();
  const fs::path rel = abs.lexically_relative(base);
  if (rel.empty() || rel.native().starts_with("..")) return abs.string();
  return rel.generic_string();
}

void Run::write_manifest() {
  nlohmann::json outputs = nlohmann::json::object();
  for (const fs::path& p : outputs_)
    outputs[manifest_key(p)] = fnv1a64_hex(read_file(p));
  nlohmann::json stages = nlohmann::json::object();
  for (const auto& [name, seconds] : stages_) stages[name] = seconds;
  nlohmann::json manifest;
  manifest["command"] = command_;
  manifest["version"] = kVersion;
  manifest["config"] = config_;
  manifest["stages"] = stages;
  manifest["outputs"] = outputs;
  write_file(ws_ / "manifests" / (command_ + ".json"), manifest.dump(2) + "\n");
  committed_ = true;
}

}  // namespace propdetect::cli
