#ifndef PBENCH_CORE_ARTIFACT_STORE_HPP
#define PBENCH_CORE_ARTIFACT_STORE_HPP

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbench/core/bytes.hpp"
#include "pbench/core/hash.hpp"

namespace pbench {

// Content-addressed blob store plus the append-only results/reports logs.
// Blobs are immutable once written; log appends take an exclusive flock so
// concurrent grid cells interleave whole lines.
class ArtifactStore {
  public:
    explicit ArtifactStore(std::filesystem::path root) : root_(std::move(root)) {
        std::filesystem::create_directories(root_ / "store");
        std::filesystem::create_directories(root_ / "figures");
    }

    const std::filesystem::path& root() const { return root_; }

    std::string put(std::span<const std::uint8_t> bytes) {
        const std::string hash = sha256_hex(bytes);
        const auto path = blob_path(hash);
        if (!std::filesystem::exists(path)) {
            const auto tmp = path.string() + ".tmp." + std::to_string(::getpid());
            write_file(tmp, bytes);
            std::filesystem::rename(tmp, path);
        }
        return hash;
    }

    std::string put(std::string_view text) {
        return put(std::span<const std::uint8_t>(
            reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    }

    bool contains(const std::string& hash) const {
        return std::filesystem::exists(blob_path(hash));
    }

    Bytes get(const std::string& hash) const {
        if (!contains(hash)) throw std::runtime_error("artifact not found: " + hash);
        return read_file(blob_path(hash));
    }

    std::filesystem::path blob_path(const std::string& hash) const {
        if (hash.size() != 64) throw std::invalid_argument("bad content hash: " + hash);
        const auto dir = root_ / "store" / hash.substr(0, 2);
        std::filesystem::create_directories(dir);
        return dir / (hash + ".bin");
    }

    std::filesystem::path results_log() const { return root_ / "results.jsonl"; }
    std::filesystem::path reports_log() const { return root_ / "reports.jsonl"; }
    std::filesystem::path figures_dir() const { return root_ / "figures"; }

    void append_results(const std::string& line) { append_line(results_log(), line); }
    void append_reports(const std::string& line) { append_line(reports_log(), line); }

    std::vector<std::string> read_results() const { return read_lines(results_log()); }
    std::vector<std::string> read_reports() const { return read_lines(reports_log()); }

  private:
    static void append_line(const std::filesystem::path& path, const std::string& line) {
        const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
        if (fd < 0) throw std::runtime_error("cannot open log " + path.string());
        ::flock(fd, LOCK_EX);
        std::string payload = line;
        payload.push_back('\n');
        const auto written = ::write(fd, payload.data(), payload.size());
        ::flock(fd, LOCK_UN);
        ::close(fd);
        if (written != static_cast<ssize_t>(payload.size()))
            throw std::runtime_error("short append to " + path.string());
    }

    static std::vector<std::string> read_lines(const std::filesystem::path& path) {
        std::vector<std::string> lines;
        std::ifstream in(path);
        for (std::string line; std::getline(in, line);)
            if (!line.empty()) lines.push_back(line);
        return lines;
    }

    std::filesystem::path root_;
};

}  // namespace pbench

#endif  // PBENCH_CORE_ARTIFACT_STORE_HPP
