#include "curate/dedup_index.hpp"

#include <fstream>

#include "curate/error.hpp"
#include "curate/simhash.hpp"

namespace curate::code {

namespace {

constexpr char kMagic[4] = {'C', 'D', 'D', 'X'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::ostream& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_uint(std::istream& in, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        const int c = in.get();
        if (c == EOF) throw ParseError("dedup index: truncated file");
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
}

void put_record(std::ostream& out, std::uint64_t fp, const std::string& id) {
    put_u64(out, fp);
    put_u32(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
}

std::pair<std::uint64_t, std::string> get_record(std::istream& in) {
    const auto fp = get_uint(in, 8);
    const auto len = get_uint(in, 4);
    std::string id(len, '\0');
    in.read(id.data(), static_cast<std::streamsize>(len));
    if (static_cast<std::uint64_t>(in.gcount()) != len) throw ParseError("dedup index: truncated record");
    return {fp, std::move(id)};
}

}  // namespace

DedupIndex::DedupIndex(unsigned hamming_radius) : radius_(hamming_radius) {
    if (radius_ > kMaxRadius) throw ConfigError("hamming radius must be <= 8");
    const unsigned blocks = radius_ + 1;
    unsigned shift = 0;
    for (unsigned b = 0; b < blocks; ++b) {
        const unsigned width = 64 / blocks + (b < 64 % blocks ? 1 : 0);
        block_shift_.push_back(shift);
        block_width_.push_back(width);
        shift += width;
    }
    blocks_.resize(blocks);
}

std::uint64_t DedupIndex::block_key(std::uint64_t value, unsigned block) const {
    const auto width = block_width_[block];
    const auto mask = width >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << width) - 1);
    return (value >> block_shift_[block]) & mask;
}

std::optional<std::string> DedupIndex::find_exact(std::uint64_t fingerprint) const {
    const auto it = function_index_.find(fingerprint);
    if (it == function_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<NearMatch> DedupIndex::find_near(std::uint64_t simhash) const {
    std::optional<std::size_t> best;
    unsigned best_distance = radius_ + 1;
    for (unsigned b = 0; b < blocks_.size(); ++b) {
        const auto it = blocks_[b].find(block_key(simhash, b));
        if (it == blocks_[b].end()) continue;
        for (auto idx : it->second) {
            const auto d = hamming_distance(simhash, repo_index_[idx].simhash);
            if (d < best_distance || (d == best_distance && best && idx < *best)) {
                best = idx;
                best_distance = d;
            }
        }
    }
    if (!best || best_distance > radius_) return std::nullopt;
    return NearMatch{repo_index_[*best].doc_id, best_distance};
}

void DedupIndex::add_simhash(std::uint64_t simhash, const std::string& doc_id) {
    const auto idx = repo_index_.size();
    repo_index_.push_back({simhash, doc_id});
    for (unsigned b = 0; b < blocks_.size(); ++b) blocks_[b][block_key(simhash, b)].push_back(idx);
}

void DedupIndex::insert(std::uint64_t fingerprint, std::uint64_t simhash, const std::string& doc_id) {
    if (function_index_.try_emplace(fingerprint, doc_id).second) function_order_.push_back(fingerprint);
    add_simhash(simhash, doc_id);
}

void DedupIndex::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write dedup index '" + path + "'");
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, radius_);
    put_u64(out, function_order_.size());
    for (auto fp : function_order_) put_record(out, fp, function_index_.at(fp));
    put_u64(out, repo_index_.size());
    for (const auto& e : repo_index_) put_record(out, e.simhash, e.doc_id);
    if (!out) throw ConfigError("failed writing dedup index '" + path + "'");
}

DedupIndex DedupIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open dedup index '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::string_view(magic, 4) != std::string_view(kMagic, 4))
        throw ParseError("dedup index: bad magic");
    if (get_uint(in, 4) != kVersion) throw ParseError("dedup index: unsupported version");
    DedupIndex index(static_cast<unsigned>(get_uint(in, 4)));
    const auto functions = get_uint(in, 8);
    for (std::uint64_t i = 0; i < functions; ++i) {
        auto [fp, id] = get_record(in);
        if (index.function_index_.try_emplace(fp, std::move(id)).second) index.function_order_.push_back(fp);
    }
    const auto hashes = get_uint(in, 8);
    for (std::uint64_t i = 0; i < hashes; ++i) {
        auto [fp, id] = get_record(in);
        index.add_simhash(fp, id);
    }
    return index;
}

}  // namespace curate::code
