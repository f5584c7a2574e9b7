#include "bbm/serialize.hpp"

#include "bbm/errors.hpp"

#include "json.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace bbm {

namespace {

static_assert(std::endian::native == std::endian::little, "serializer assumes little-endian");

constexpr char kMagic[8] = {'B', 'B', 'M', 'S', 'N', 'A', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    template <class T>
    void put(T v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        buf.insert(buf.end(), p, p + sizeof(T));
    }
    std::vector<std::uint8_t> buf;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : bytes(b) {}
    template <class T>
    T get() {
        if (pos + sizeof(T) > bytes.size()) throw Error(ErrorCode::IoError, "truncated snapshot");
        T v;
        std::memcpy(&v, bytes.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;
};

// Per-particle checkpoint positions: (first checkpoint index, positions).
std::vector<std::pair<std::uint32_t, std::vector<double>>> positions_by_node(const Snapshot& s) {
    std::vector<std::pair<std::uint32_t, std::vector<double>>> out(s.size(), {0u, {}});
    for (std::size_t c = 0; c < s.checkpoint_times().size(); ++c) {
        for (const auto& e : s.alive(c)) {
            auto& slot = out[static_cast<std::size_t>(e.node)];
            if (slot.second.empty()) slot.first = static_cast<std::uint32_t>(c);
            slot.second.push_back(e.position);
        }
    }
    return out;
}

}  // namespace

std::vector<std::uint8_t> write_snapshot_binary(const Snapshot& snapshot) {
    Writer w;
    w.buf.insert(w.buf.end(), kMagic, kMagic + 8);
    w.put(kVersion);
    w.put(snapshot.horizon());
    w.put(snapshot.rng_seed());
    w.put(static_cast<std::uint32_t>(snapshot.checkpoint_times().size()));
    for (double s : snapshot.checkpoint_times()) w.put(s);
    w.put(static_cast<std::uint64_t>(snapshot.size()));
    const auto positions = positions_by_node(snapshot);
    for (std::size_t id = 0; id < snapshot.size(); ++id) {
        const auto label = snapshot.label_of(static_cast<NodeId>(id));
        w.put(static_cast<std::uint32_t>(label.generation()));
        for (auto l : label.letters()) w.put(l);
        const Node& n = snapshot.node(static_cast<NodeId>(id));
        w.put(n.birth);
        w.put(n.death);
        w.put(n.birth_position);
        w.put(positions[id].first);
        w.put(static_cast<std::uint32_t>(positions[id].second.size()));
        for (double x : positions[id].second) w.put(x);
    }
    return std::move(w.buf);
}

Snapshot read_snapshot_binary(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    char magic[8];
    for (char& c : magic) c = static_cast<char>(r.get<std::uint8_t>());
    if (std::memcmp(magic, kMagic, 8) != 0) throw Error(ErrorCode::IoError, "bad snapshot magic");
    if (r.get<std::uint32_t>() != kVersion) throw Error(ErrorCode::IoError, "unknown version");

    Snapshot s;
    s.horizon_ = r.get<double>();
    s.seed_ = r.get<std::uint64_t>();
    s.checkpoints_.resize(r.get<std::uint32_t>());
    for (double& c : s.checkpoints_) c = r.get<double>();
    s.census_.resize(s.checkpoints_.size());

    const auto count = r.get<std::uint64_t>();
    std::map<std::vector<std::uint8_t>, NodeId> ids;
    s.nodes_.resize(count);
    for (std::uint64_t id = 0; id < count; ++id) {
        std::vector<std::uint8_t> letters(r.get<std::uint32_t>());
        for (auto& l : letters) l = r.get<std::uint8_t>();
        Node& n = s.nodes_[id];
        n.generation = static_cast<std::uint32_t>(letters.size());
        n.birth = r.get<double>();
        n.death = r.get<double>();
        n.birth_position = r.get<double>();
        if (!letters.empty()) {
            std::vector<std::uint8_t> parent(letters.begin(), letters.end() - 1);
            auto it = ids.find(parent);
            if (it == ids.end()) throw Error(ErrorCode::IoError, "particle precedes its parent");
            n.parent = it->second;
            if (letters.back() == 1) s.nodes_[static_cast<std::size_t>(n.parent)].first_child =
                static_cast<NodeId>(id);
        }
        ids.emplace(std::move(letters), static_cast<NodeId>(id));
        const auto first = r.get<std::uint32_t>();
        const auto k = r.get<std::uint32_t>();
        for (std::uint32_t j = 0; j < k; ++j) {
            if (first + j >= s.census_.size()) throw Error(ErrorCode::IoError, "bad checkpoint index");
            s.census_[first + j].push_back(AliveEntry{static_cast<NodeId>(id), r.get<double>()});
        }
    }
    return s;
}

std::string write_snapshot_json(const Snapshot& snapshot) {
    nlohmann::ordered_json j;
    j["format"] = "bbm-snapshot";
    j["version"] = kVersion;
    j["horizon"] = snapshot.horizon();
    j["rng_seed"] = snapshot.rng_seed();
    j["checkpoint_times"] = snapshot.checkpoint_times();
    auto& particles = j["particles"] = nlohmann::ordered_json::array();
    const auto positions = positions_by_node(snapshot);
    for (std::size_t id = 0; id < snapshot.size(); ++id) {
        const Node& n = snapshot.node(static_cast<NodeId>(id));
        nlohmann::ordered_json p;
        p["label"] = snapshot.label_of(static_cast<NodeId>(id)).str();
        p["birth"] = n.birth;
        p["death"] = n.death;
        p["birth_position"] = n.birth_position;
        p["first_checkpoint"] = positions[id].first;
        p["positions"] = positions[id].second;
        particles.push_back(std::move(p));
    }
    return j.dump();
}

void save_snapshot(const Snapshot& snapshot, const std::string& path, bool json) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
    if (json) {
        out << write_snapshot_json(snapshot);
    } else {
        const auto bytes = write_snapshot_binary(snapshot);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    }
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + path);
}

}  // namespace bbm
