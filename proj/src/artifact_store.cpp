#include "magus/artifact_store.hpp"

#include <fstream>

#include "magus/errors.hpp"

namespace fs = std::filesystem;

namespace magus {

ArtifactStore::ArtifactStore(fs::path run_dir) : run_dir_(std::move(run_dir)) {
    fs::create_directories(run_dir_ / "artifacts");
}

std::string ArtifactStore::extension_for(Modality modality) {
    switch (modality) {
        case Modality::Text: return "txt";
        case Modality::Image: return "png";
        case Modality::Audio: return "wav";
        case Modality::Video: return "mp4";
    }
    return "bin";
}

MediaRef ArtifactStore::put(std::string_view bytes, Modality modality,
                            std::map<std::string, std::string> meta) {
    const std::string id = "art-" + hex64(fnv1a64(bytes));
    MediaRef ref;
    ref.id = id;
    ref.modality = modality;
    ref.uri = "artifacts/" + id + "." + extension_for(modality);
    ref.meta = std::move(meta);

    std::lock_guard lock(mu_);
    const fs::path target = run_dir_ / "artifacts" / (id + "." + extension_for(modality));
    if (!fs::exists(target)) {
        std::ofstream out(target, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write artifact " + target.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    return ref;
}

MediaRef ArtifactStore::import_file(const fs::path& source, Modality modality) {
    std::ifstream in(source, std::ios::binary);
    if (!in) throw Error("cannot read media file " + source.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::map<std::string, std::string> meta{{"source", source.filename().string()}};
    return put(bytes, modality, std::move(meta));
}

fs::path ArtifactStore::resolve(const MediaRef& ref) const {
    const fs::path path = run_dir_ / fs::path(ref.uri).make_preferred();
    if (!fs::exists(path)) throw Error("artifact '" + ref.id + "' does not resolve: " + path.string());
    return path;
}

bool ArtifactStore::exists(const MediaRef& ref) const {
    return fs::exists(run_dir_ / fs::path(ref.uri).make_preferred());
}

}  // namespace magus
