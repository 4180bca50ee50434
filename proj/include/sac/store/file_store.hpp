#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "sac/core/types.hpp"
#include "sac/store/history.hpp"

namespace sac::store
{

// On-disk layout: <root>/<app_id>/history.index and state-<seq>.snap, both in
// canonical form. Files are replaced atomically (write temp, rename). One
// writer per app at a time; readers need no lock.
class FileStore
{
public:
    explicit FileStore(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }

    // Writes the snapshot then the index. A snapshot for an already stored
    // seq is only replaced by one of a higher content_rev (refresh);
    // anything else raises SeqConflict.
    void commit(const core::AppState& state, const StateHistory& history);

    core::AppState load_state(const core::AppId& app_id, std::int64_t seq) const;
    std::optional<StateHistory> load_history(const core::AppId& app_id) const;

    std::vector<core::AppId> apps() const;
    std::vector<std::filesystem::path> snapshots(const core::AppId& app_id) const;

private:
    std::mutex& lock_for(const core::AppId& app_id);

    std::filesystem::path root_;
    std::mutex registry_mutex_;
    std::map<core::AppId, std::unique_ptr<std::mutex>> app_mutexes_;
};

std::filesystem::path snapshot_name(std::int64_t seq);
void write_atomically(const std::filesystem::path& file, const std::string& bytes);
std::string read_file(const std::filesystem::path& file);

} // namespace sac::store
