#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>

#include "magus/core.hpp"

namespace magus {

// Content-addressed artifact store under <run_dir>/artifacts. Identical bytes
// map to the same id and uri; uris are run-directory-relative with forward
// slashes so run layouts compare equal across platforms.
class ArtifactStore {
public:
    explicit ArtifactStore(std::filesystem::path run_dir);

    const std::filesystem::path& run_dir() const { return run_dir_; }

    MediaRef put(std::string_view bytes, Modality modality,
                 std::map<std::string, std::string> meta = {});

    // Copies an external file into the store (user-supplied input media).
    MediaRef import_file(const std::filesystem::path& source, Modality modality);

    std::filesystem::path resolve(const MediaRef& ref) const;  // throws if missing
    bool exists(const MediaRef& ref) const;

    static std::string extension_for(Modality modality);

private:
    std::filesystem::path run_dir_;
    mutable std::mutex mu_;
};

}  // namespace magus
