#include <fstream>
#include <sstream>
#include <stdexcept>

#include "aact/errors.hpp"
#include "aact/triage.hpp"

namespace aact {

EventLog::EventLog(const std::filesystem::path& path) {
    std::uint64_t size = 0;
    if (std::filesystem::exists(path)) {
        // Drop a torn final line so new events start on a fresh line.
        std::ifstream in(path, std::ios::binary);
        std::stringstream buffer;
        buffer << in.rdbuf();
        const std::string text = buffer.str();
        const auto last = text.rfind('\n');
        size = last == std::string::npos ? 0 : last + 1;
        if (size != text.size()) std::filesystem::resize_file(path, size);
    }
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw std::runtime_error("cannot open event log " + path.string());
    offset_ = size;
}

std::uint64_t EventLog::append(const nlohmann::json& event) {
    const std::string line = event.dump() + "\n";
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    if (!out_) throw std::runtime_error("event log write failed");
    offset_ += line.size();
    return offset_;
}

void EventLog::flush() { out_.flush(); }

std::vector<std::pair<std::uint64_t, nlohmann::json>> EventLog::read(const std::filesystem::path& path) {
    std::vector<std::pair<std::uint64_t, nlohmann::json>> out;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto end = text.find('\n', pos);
        if (end == std::string::npos) break;
        try {
            out.emplace_back(pos, nlohmann::json::parse(text.begin() + static_cast<std::ptrdiff_t>(pos),
                                                        text.begin() + static_cast<std::ptrdiff_t>(end)));
        } catch (const nlohmann::json::exception& e) {
            throw CorruptCheckpoint("event log line at offset " + std::to_string(pos) + ": " + e.what());
        }
        pos = end + 1;
    }
    return out;
}

}  // namespace aact
