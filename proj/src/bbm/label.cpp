#include "bbm/label.hpp"

#include "bbm/errors.hpp"

#include <algorithm>

namespace bbm {

ParticleLabel::ParticleLabel(std::vector<std::uint8_t> letters) : letters_(std::move(letters)) {
    for (auto l : letters_) {
        if (l != 1 && l != 2) throw Error(ErrorCode::UnknownLabel, "label letters must be 1 or 2");
    }
}

ParticleLabel ParticleLabel::parse(std::string_view word) {
    std::vector<std::uint8_t> letters;
    letters.reserve(word.size());
    for (char c : word) {
        if (c != '1' && c != '2')
            throw Error(ErrorCode::UnknownLabel, "invalid label '" + std::string(word) + "'");
        letters.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    return ParticleLabel(std::move(letters));
}

ParticleLabel ParticleLabel::parent() const {
    if (is_root()) throw Error(ErrorCode::UnknownLabel, "the root has no parent");
    return ParticleLabel(std::vector<std::uint8_t>(letters_.begin(), letters_.end() - 1));
}

ParticleLabel ParticleLabel::child(std::uint8_t letter) const {
    auto letters = letters_;
    letters.push_back(letter);
    return ParticleLabel(std::move(letters));
}

bool ParticleLabel::is_ancestor_of(const ParticleLabel& v) const noexcept {
    return letters_.size() <= v.letters_.size() &&
           std::equal(letters_.begin(), letters_.end(), v.letters_.begin());
}

ParticleLabel ParticleLabel::common_ancestor(const ParticleLabel& u, const ParticleLabel& v) {
    auto [iu, iv] = std::mismatch(u.letters_.begin(), u.letters_.end(), v.letters_.begin(),
                                  v.letters_.end());
    return ParticleLabel(std::vector<std::uint8_t>(u.letters_.begin(), iu));
}

std::string ParticleLabel::str() const {
    std::string s;
    s.reserve(letters_.size());
    for (auto l : letters_) s.push_back(static_cast<char>('0' + l));
    return s;
}

}  // namespace bbm
