#include "liveia/store.hpp"

#include "liveia/error.hpp"
#include "liveia/serialize.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

namespace liveia::store {

namespace {

using serial::json;

[[noreturn]] void io_error(const std::string& what)
{
    throw Error(ErrorCode::Io, what + ": " + std::strerror(errno));
}

std::string encode_u32(std::uint32_t n)
{
    std::string out(4, '\0');
    for (int i = 0; i < 4; ++i) out[i] = static_cast<char>((n >> (8 * i)) & 0xff);
    return out;
}

std::uint32_t decode_u32(const std::string& bytes, std::size_t pos)
{
    std::uint32_t n = 0;
    for (int i = 0; i < 4; ++i) n |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    return n;
}

void fsync_dir(const std::filesystem::path& dir)
{
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

} // namespace

FeatureVector features(const scene::Scenario& s)
{
    FeatureVector f{};
    const double n = static_cast<double>(s.spheres.size());
    f[0] = n;
    if (n > 0) {
        for (const auto& sp : s.spheres) {
            f[1] += sp.radius;
            f[2] += sp.light_level;
            if (sp.shell) {
                f[3] += sp.shell->thickness;
                f[4] += sp.shell->opacity;
            }
            f[5] += static_cast<double>(sp.fractures.size());
            f[6] += static_cast<double>(sp.bubbles.size());
            f[7] += sp.border_blur;
        }
        for (int i = 1; i <= 7; ++i) f[i] /= n;
    }
    const double m = static_cast<double>(s.beams.size());
    f[8] = m;
    if (m > 0) {
        for (const auto& b : s.beams) {
            f[9] += b.spread;
            f[10] += b.origin_depth;
        }
        f[9] /= m;
        f[10] /= m;
    }
    f[11] = static_cast<double>(s.sparks.size());
    return f;
}

double cosine(const FeatureVector& a, const FeatureVector& b)
{
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0) return 0.0;
    return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

Store::Store(std::filesystem::path dir) : dir_(std::move(dir))
{
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create data directory " + dir_.string() + ": " + ec.message());
    const auto log = dir_ / "scenarios.log";
    const bool fresh = !std::filesystem::exists(log);
    fd_ = ::open(log.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) io_error("cannot open " + log.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd_);
        throw Error(ErrorCode::Io, "data directory " + dir_.string() + " is in use by another process");
    }
    if (fresh) fsync_dir(dir_);
    try {
        replay();
        write_index();
    } catch (...) {
        ::close(fd_);
        throw;
    }
}

Store::~Store()
{
    try {
        write_index();
    } catch (...) {
        // the index is rebuildable; losing it is harmless
    }
    if (fd_ >= 0) ::close(fd_);
}

void Store::replay()
{
    std::string bytes;
    {
        std::ifstream in(dir_ / "scenarios.log", std::ios::binary);
        if (!in) throw Error(ErrorCode::Io, "cannot read " + (dir_ / "scenarios.log").string());
        bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    std::size_t pos = 0;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < 4) break; // torn length prefix
        const std::uint32_t len = decode_u32(bytes, pos);
        if (bytes.size() - pos - 4 < len) break; // torn payload
        const std::string payload = bytes.substr(pos + 4, len);
        const bool last = pos + 4 + len == bytes.size();
        json rec;
        try {
            rec = json::parse(payload);
        } catch (const json::exception&) {
            if (last) break; // a tail whose length landed but whose bytes did not
            throw Error(ErrorCode::Corrupt, "unparseable log record at offset " + std::to_string(pos));
        }
        try {
            const std::uint64_t seq = rec.at("seq").get<std::uint64_t>();
            const std::string op = rec.at("op").get<std::string>();
            if (op == "put") {
                apply_put(rec.at("document").get<std::string>(), rec.at("digest").get<std::string>(), seq, pos);
            } else if (op == "delete") {
                auto it = entries_.find(rec.at("id").get<std::string>());
                if (it == entries_.end()) throw Error(ErrorCode::Corrupt, "delete of unknown id");
                it->second.deleted = true;
                it->second.last_seq = seq;
                it->second.offset = pos;
            } else {
                throw Error(ErrorCode::Corrupt, "unknown op '" + op + "'");
            }
            next_seq_ = std::max(next_seq_, seq + 1);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Corrupt, "bad log record at offset " + std::to_string(pos) + ": " + e.what());
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Corrupt) throw;
            throw Error(ErrorCode::Corrupt, "bad log record at offset " + std::to_string(pos) + ": " + e.what());
        }
        pos += 4 + len;
    }

    if (pos < bytes.size()) {
        // drop the torn tail so the next append starts on a record boundary
        if (::ftruncate(fd_, static_cast<off_t>(pos)) != 0) io_error("cannot truncate torn log tail");
        if (::fsync(fd_) != 0) io_error("fsync");
    }
    log_size_ = pos;

    // A crash between a fork's two records leaves the child without its link
    // on the parent; restore it.
    std::vector<std::pair<std::string, std::string>> missing;
    for (const auto& [id, e] : entries_) {
        const auto& parent = e.scenario.parent;
        if (!parent) continue;
        auto it = entries_.find(*parent);
        if (it == entries_.end() || it->second.deleted) continue;
        const auto& kids = it->second.scenario.children;
        if (std::find(kids.begin(), kids.end(), id) == kids.end()) missing.emplace_back(*parent, id);
    }
    for (const auto& [parent, child] : missing) {
        scene::Scenario p = entries_.at(parent).scenario;
        p.children.push_back(child);
        put_locked(p, true);
    }
}

void Store::apply_put(const std::string& document, const std::string& digest, std::uint64_t seq, std::uint64_t offset)
{
    scene::Scenario s = serial::deserialize(document);
    if (serial::content_digest(s) != digest) throw Error(ErrorCode::Corrupt, "digest mismatch for '" + s.id + "'");
    if (serial::serialize(s) != document) throw Error(ErrorCode::Corrupt, "non-canonical document for '" + s.id + "'");
    auto [it, inserted] = entries_.try_emplace(s.id);
    Entry& e = it->second;
    if (inserted || e.deleted) e.first_seq = seq;
    e.document = document;
    e.digest = digest;
    e.features = features(s);
    e.scenario = std::move(s);
    e.last_seq = seq;
    e.offset = offset;
    e.deleted = false;
}

std::uint64_t Store::append(const std::string& payload)
{
    if (payload.size() > 0xffffffffu) throw Error(ErrorCode::Validation, "document too large for the log");
    const std::string rec = encode_u32(static_cast<std::uint32_t>(payload.size())) + payload;
    const std::uint64_t offset = log_size_;
    std::size_t done = 0;
    while (done < rec.size()) {
        const ssize_t n = ::pwrite(fd_, rec.data() + done, rec.size() - done, static_cast<off_t>(offset + done));
        if (n < 0) {
            if (errno == EINTR) continue;
            const int saved = errno;
            [[maybe_unused]] int rc = ::ftruncate(fd_, static_cast<off_t>(offset));
            errno = saved;
            io_error("log append failed");
        }
        done += static_cast<std::size_t>(n);
    }
    if (::fdatasync(fd_) != 0) io_error("fdatasync");
    log_size_ += rec.size();
    return offset;
}

void Store::put_locked(const scene::Scenario& in, bool internal)
{
    scene::Scenario s = in;
    if (!internal) {
        // fork links are owned by the store, never by the caller's document
        s.children.clear();
        for (const Entry* c : children_of(s.id)) s.children.push_back(c->scenario.id);
    }
    scene::require_valid(s);
    if (s.id.empty()) throw Error(ErrorCode::Validation, "scenario id must not be empty");

    auto existing = entries_.find(s.id);
    if (!internal && existing != entries_.end() && !existing->second.deleted && !existing->second.scenario.children.empty())
        throw Error(ErrorCode::Version, "scenario '" + s.id + "' has been forked and is immutable");
    if (s.parent) {
        if (*s.parent == s.id) throw Error(ErrorCode::Validation, "scenario cannot be its own parent");
        if (!entries_.contains(*s.parent)) throw Error(ErrorCode::Validation, "unknown parent '" + *s.parent + "'");
        for (const auto& a : ancestor_ids(*s.parent)) {
            if (a == s.id) throw Error(ErrorCode::Validation, "parent link would form a cycle");
        }
    }

    const std::string document = serial::serialize(s);
    const std::string digest = serial::content_digest(s);
    const std::uint64_t seq = next_seq_;
    json rec = {{"digest", digest}, {"document", document}, {"op", "put"}, {"seq", seq}};
    const std::uint64_t offset = append(serial::canonical_dump(rec));
    ++next_seq_;
    apply_put(document, digest, seq, offset);

    if (!internal && s.parent) {
        auto it = entries_.find(*s.parent);
        if (it != entries_.end() && !it->second.deleted) {
            const auto& kids = it->second.scenario.children;
            if (std::find(kids.begin(), kids.end(), s.id) == kids.end()) {
                scene::Scenario p = it->second.scenario;
                p.children.push_back(s.id);
                put_locked(p, true);
            }
        }
    }
}

std::string Store::put(const scene::Scenario& s)
{
    std::unique_lock lock(mutex_);
    put_locked(s, false);
    return entries_.at(s.id).digest;
}

const Store::Entry& Store::live(const std::string& id) const
{
    auto it = entries_.find(id);
    if (it == entries_.end() || it->second.deleted) throw Error(ErrorCode::NotFound, "no scenario '" + id + "'");
    return it->second;
}

scene::Scenario Store::get(const std::string& id) const
{
    std::shared_lock lock(mutex_);
    return live(id).scenario;
}

std::string Store::document(const std::string& id) const
{
    std::shared_lock lock(mutex_);
    return live(id).document;
}

std::string Store::digest(const std::string& id) const
{
    std::shared_lock lock(mutex_);
    return live(id).digest;
}

bool Store::contains(const std::string& id) const
{
    std::shared_lock lock(mutex_);
    auto it = entries_.find(id);
    return it != entries_.end() && !it->second.deleted;
}

std::vector<std::string> Store::ids() const
{
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, e] : entries_) {
        if (!e.deleted) out.push_back(id);
    }
    return out;
}

void Store::remove(const std::string& id)
{
    std::unique_lock lock(mutex_);
    live(id);
    json rec = {{"id", id}, {"op", "delete"}, {"seq", next_seq_}};
    const std::uint64_t offset = append(serial::canonical_dump(rec));
    Entry& e = entries_.at(id);
    e.deleted = true;
    e.last_seq = next_seq_++;
    e.offset = offset;
}

scene::Scenario Store::fork(const std::string& id)
{
    std::unique_lock lock(mutex_);
    scene::Scenario parent = live(id).scenario;
    const scene::Scenario child = scene::fork(parent);
    // child first: a crash before the parent's record is repaired on replay
    put_locked(child, false);
    return entries_.at(child.id).scenario;
}

std::vector<const Store::Entry*> Store::children_of(const std::string& id) const
{
    std::vector<const Entry*> out;
    for (const auto& [cid, e] : entries_) {
        if (e.scenario.parent && *e.scenario.parent == id) out.push_back(&e);
    }
    std::sort(out.begin(), out.end(), [](const Entry* a, const Entry* b) {
        if (a->scenario.created_at != b->scenario.created_at) return a->scenario.created_at < b->scenario.created_at;
        return a->first_seq < b->first_seq;
    });
    return out;
}

std::vector<std::string> Store::ancestor_ids(const std::string& id) const
{
    std::vector<std::string> out;
    std::set<std::string> seen{id};
    auto it = entries_.find(id);
    while (it != entries_.end() && it->second.scenario.parent) {
        const std::string& p = *it->second.scenario.parent;
        if (!seen.insert(p).second) break;
        out.push_back(p);
        it = entries_.find(p);
    }
    std::reverse(out.begin(), out.end());
    return out;
}

void Store::descendant_ids(const std::string& id, std::vector<std::string>& out) const
{
    for (const Entry* c : children_of(id)) {
        out.push_back(c->scenario.id);
        descendant_ids(c->scenario.id, out);
    }
}

TimelineNode Store::timeline_node(const std::string& id) const
{
    const Entry& e = entries_.at(id);
    TimelineNode node{id, e.scenario.title, e.scenario.created_at, e.deleted, {}};
    for (const Entry* c : children_of(id)) node.children.push_back(timeline_node(c->scenario.id));
    return node;
}

TimelineNode Store::timeline(const std::string& root) const
{
    std::shared_lock lock(mutex_);
    live(root);
    return timeline_node(root);
}

Lineage Store::lineage(const std::string& id) const
{
    std::shared_lock lock(mutex_);
    live(id);
    Lineage out;
    for (const auto& a : ancestor_ids(id)) {
        const Entry& e = entries_.at(a);
        if (!e.deleted) out.ancestors.push_back(e.scenario);
    }
    std::vector<std::string> desc;
    descendant_ids(id, desc);
    for (const auto& d : desc) {
        const Entry& e = entries_.at(d);
        if (!e.deleted) out.descendants.push_back(e.scenario);
    }
    return out;
}

std::vector<Match> Store::similar_locked(const std::string& id, int k) const
{
    if (k < 1) throw Error(ErrorCode::Validation, "k must be >= 1");
    const Entry& self = live(id);
    std::set<std::string> excluded{id};
    for (const auto& a : ancestor_ids(id)) excluded.insert(a);
    std::vector<std::string> desc;
    descendant_ids(id, desc);
    excluded.insert(desc.begin(), desc.end());

    std::vector<Match> out;
    for (const auto& [cid, e] : entries_) {
        if (e.deleted || excluded.contains(cid)) continue;
        out.push_back({cid, cosine(self.features, e.features)});
    }
    std::sort(out.begin(), out.end(), [](const Match& a, const Match& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (out.size() > static_cast<std::size_t>(k)) out.resize(static_cast<std::size_t>(k));
    return out;
}

std::vector<Match> Store::similar(const std::string& id, int k) const
{
    std::shared_lock lock(mutex_);
    return similar_locked(id, k);
}

std::vector<Suggestion> Store::suggest(const std::string& id, int k) const
{
    std::shared_lock lock(mutex_);
    std::vector<Suggestion> out;
    for (const auto& m : similar_locked(id, k)) {
        Suggestion s{m.id, m.score, {}};
        std::set<std::string> seen{m.id};
        std::string cur = m.id;
        for (;;) {
            const Entry* next = nullptr;
            for (const Entry* c : children_of(cur)) {
                if (!c->deleted) {
                    next = c;
                    break;
                }
            }
            if (!next || !seen.insert(next->scenario.id).second) break;
            s.sequence.push_back({next->scenario.id, next->scenario.title});
            cur = next->scenario.id;
        }
        out.push_back(std::move(s));
    }
    return out;
}

void Store::write_index() const
{
    std::shared_lock lock(mutex_);
    json scenarios = json::object();
    for (const auto& [id, e] : entries_) {
        json f = json::array();
        for (double v : e.features) f.push_back(v);
        scenarios[id] = {
            {"created_at", e.scenario.created_at},
            {"deleted", e.deleted},
            {"digest", e.digest},
            {"features", f},
            {"first_seq", e.first_seq},
            {"last_seq", e.last_seq},
            {"offset", e.offset},
            {"parent", e.scenario.parent ? json(*e.scenario.parent) : json(nullptr)},
            {"title", e.scenario.title},
        };
    }
    const json index = {{"log_bytes", log_size_}, {"next_seq", next_seq_}, {"scenarios", scenarios}, {"version", 1}};
    const auto tmp = dir_ / "index.json.tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        out << serial::canonical_dump(index) << '\n';
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, dir_ / "index.json", ec);
    if (ec) throw Error(ErrorCode::Io, "cannot replace index.json: " + ec.message());
}

} // namespace liveia::store
