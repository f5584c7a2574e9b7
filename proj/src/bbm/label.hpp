#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bbm {

/// Ulam-Harris-Neveu label: a finite word over {1,2}. The root is the empty word.
class ParticleLabel {
public:
    ParticleLabel() = default;
    explicit ParticleLabel(std::vector<std::uint8_t> letters);

    /// Parses "", "1", "1221", ... Throws Error(UnknownLabel) on other characters.
    static ParticleLabel parse(std::string_view word);

    std::size_t generation() const noexcept { return letters_.size(); }
    bool is_root() const noexcept { return letters_.empty(); }
    const std::vector<std::uint8_t>& letters() const noexcept { return letters_; }

    ParticleLabel parent() const;
    ParticleLabel child(std::uint8_t letter) const;

    /// u <= v iff u is a prefix of v.
    bool is_ancestor_of(const ParticleLabel& v) const noexcept;
    static ParticleLabel common_ancestor(const ParticleLabel& u, const ParticleLabel& v);

    std::string str() const;

    auto operator<=>(const ParticleLabel&) const = default;

private:
    std::vector<std::uint8_t> letters_;
};

}  // namespace bbm
