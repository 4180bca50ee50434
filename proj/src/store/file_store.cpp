#include "sac/store/file_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "sac/core/codec.hpp"
#include "sac/error.hpp"

namespace fs = std::filesystem;

namespace sac::store
{

fs::path snapshot_name(std::int64_t seq)
{
    return "state-" + std::to_string(seq) + ".snap";
}

void write_atomically(const fs::path& file, const std::string& bytes)
{
    auto temp = file;
    temp += ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorKind::IoError, "cannot write " + temp.string());
        out << bytes;
        out.flush();
        if (!out)
            throw Error(ErrorKind::IoError, "short write to " + temp.string());
    }
    std::error_code ec;
    fs::rename(temp, file, ec);
    if (ec)
        throw Error(ErrorKind::IoError, "cannot rename into " + file.string() + ": " + ec.message());
}

std::string read_file(const fs::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

FileStore::FileStore(fs::path root) : root_(std::move(root))
{
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec)
        throw Error(ErrorKind::IoError, "cannot create store " + root_.string() + ": " + ec.message());
}

std::mutex& FileStore::lock_for(const core::AppId& app_id)
{
    std::lock_guard guard(registry_mutex_);
    auto& m = app_mutexes_[app_id];
    if (!m)
        m = std::make_unique<std::mutex>();
    return *m;
}

void FileStore::commit(const core::AppState& state, const StateHistory& history)
{
    if (state.app_id.empty() || state.app_id.find('/') != std::string::npos || state.app_id.starts_with("."))
        throw Error(ErrorKind::SchemaViolation, "app id unusable as a directory name: " + state.app_id);
    std::lock_guard guard(lock_for(state.app_id));
    const auto dir = root_ / state.app_id;
    fs::create_directories(dir);
    const auto snap = dir / snapshot_name(state.state_seq);
    if (fs::exists(snap))
    {
        const auto stored = core::deserialize_state(read_file(snap));
        if (stored != state && stored.content_rev >= state.content_rev)
            throw Error(ErrorKind::SeqConflict, "snapshot " + snap.string() + " already holds different content");
    }
    write_atomically(snap, core::serialize_state(state));
    Json index = history;
    write_atomically(dir / "history.index", core::canonical(index));
}

core::AppState FileStore::load_state(const core::AppId& app_id, std::int64_t seq) const
{
    return core::deserialize_state(read_file(root_ / app_id / snapshot_name(seq)));
}

std::optional<StateHistory> FileStore::load_history(const core::AppId& app_id) const
{
    const auto file = root_ / app_id / "history.index";
    if (!fs::exists(file))
        return std::nullopt;
    try
    {
        return core::parse_document(read_file(file)).get<StateHistory>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw DecodeError(0, "history index of " + app_id + ": " + e.what());
    }
}

std::vector<core::AppId> FileStore::apps() const
{
    std::vector<core::AppId> out;
    for (const auto& entry : fs::directory_iterator(root_))
        if (entry.is_directory() && fs::exists(entry.path() / "history.index"))
            out.push_back(entry.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<fs::path> FileStore::snapshots(const core::AppId& app_id) const
{
    std::vector<fs::path> out;
    const auto dir = root_ / app_id;
    if (!fs::exists(dir))
        return out;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".snap")
            out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace sac::store
