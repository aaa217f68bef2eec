#include "dexray/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "detail/csv.hpp"
#include "dexray/errors.hpp"
#include "dexray/random.hpp"

namespace dexray::dataset {

namespace {

constexpr std::array<std::string_view, kNumClasses> kClassNames{
    "Assault Rifle", "Revolver", "Self-Loading Pistol", "Shotgun", "Sub-Machine Gun"};

bool plain_field(std::string_view s) {
    return !s.empty() && s.find('"') == std::string_view::npos;
}

}  // namespace

std::string_view class_name(ClassLabel label) { return kClassNames.at(static_cast<std::size_t>(class_id(label))); }

std::optional<ClassLabel> class_from_id(int id) {
    if (id < 0 || id >= kNumClasses) return std::nullopt;
    return static_cast<ClassLabel>(id);
}

std::optional<ClassLabel> class_from_name(std::string_view name) {
    for (int i = 0; i < kNumClasses; ++i)
        if (kClassNames[i] == name) return static_cast<ClassLabel>(i);
    return std::nullopt;
}

void DatasetManifest::validate() const {
    std::unordered_set<std::string> ids;
    std::unordered_map<std::string, ClassLabel> group_class;
    for (const auto& rec : records) {
        if (!ids.insert(rec.image_id).second) throw ValidationError("duplicate image_id '" + rec.image_id + "'");
        auto [it, inserted] = group_class.emplace(rec.imagegroup_id, rec.label);
        if (!inserted && it->second != rec.label) {
            throw ValidationError("imagegroup '" + rec.imagegroup_id + "' mixes class " +
                                  std::to_string(class_id(it->second)) + " and class " +
                                  std::to_string(class_id(rec.label)) + " (image '" + rec.image_id + "')");
        }
    }
}

const ImageRecord* DatasetManifest::find(std::string_view image_id) const {
    auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.image_id == image_id; });
    return it == records.end() ? nullptr : &*it;
}

std::filesystem::path DatasetManifest::resolve(const ImageRecord& record) const {
    return record.path.is_absolute() ? record.path : base_dir / record.path;
}

DatasetManifest parse_manifest(std::istream& in, std::string source) {
    DatasetManifest manifest;
    manifest.source = std::move(source);

    std::string line;
    if (!detail::next_line(in, line)) throw ParseError(1, "empty manifest");
    if (line != kManifestHeader) throw ParseError(1, "expected header '" + std::string(kManifestHeader) + "'");

    std::size_t line_no = 1;
    while (detail::next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() != 4) throw ParseError(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
        for (const auto& f : fields)
            if (!plain_field(f)) throw ParseError(line_no, "empty or quoted field");
        const auto id = detail::parse_int(fields[2]);
        if (!id) throw ParseError(line_no, "class_id '" + fields[2] + "' is not an integer");
        const auto label = class_from_id(static_cast<int>(*id));
        if (!label) throw ValidationError("line " + std::to_string(line_no) + ": unknown class_id " + fields[2] +
                                          " for image '" + fields[0] + "'");
        manifest.records.push_back(ImageRecord{fields[0], fields[1], *label, fields[3]});
    }
    manifest.validate();
    return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open manifest");
    auto manifest = parse_manifest(in, path.string());
    manifest.base_dir = path.parent_path();
    return manifest;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path.string(), "cannot write manifest");
    out << kManifestHeader << '\n';
    for (const auto& r : manifest.records)
        out << r.image_id << ',' << r.path.generic_string() << ',' << class_id(r.label) << ',' << r.imagegroup_id
            << '\n';
    if (!out) throw IoError(path.string(), "write failed");
}

namespace {

struct Group {
    std::string id;
    std::vector<std::string> members;
};

// Groups of each class in first-seen manifest order.
std::array<std::vector<Group>, kNumClasses> groups_by_class(const DatasetManifest& manifest) {
    std::array<std::vector<Group>, kNumClasses> out;
    std::unordered_map<std::string, std::pair<int, std::size_t>> where;
    for (const auto& rec : manifest.records) {
        const int c = class_id(rec.label);
        auto it = where.find(rec.imagegroup_id);
        if (it == where.end()) {
            it = where.emplace(rec.imagegroup_id, std::pair{c, out[c].size()}).first;
            out[c].push_back(Group{rec.imagegroup_id, {}});
        }
        out[it->second.first][it->second.second].members.push_back(rec.image_id);
    }
    return out;
}

}  // namespace

SplitResult stratified_group_split(const DatasetManifest& manifest, double ratio, std::uint64_t seed) {
    if (manifest.records.empty()) throw ValidationError("cannot split an empty manifest");
    if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must lie in (0, 1)");
    manifest.validate();

    SplitResult result;
    result.assignment.seed = seed;
    result.assignment.ratio = ratio;

    auto by_class = groups_by_class(manifest);
    for (int c = 0; c < kNumClasses; ++c) {
        auto& groups = by_class[c];
        if (groups.empty()) continue;

        auto send = [&](const Group& g, std::set<std::string>& side) {
            side.insert(g.members.begin(), g.members.end());
        };

        if (groups.size() == 1) {
            result.degenerate.push_back(
                DegenerateClass{static_cast<ClassLabel>(c), groups.front().id, groups.front().members.size()});
            send(groups.front(), result.assignment.train);
            continue;
        }

        Rng rng(derive_seed(seed, "split/class/" + std::to_string(c)));
        rng.shuffle(std::span<Group>(groups));

        std::size_t total = 0;
        for (const auto& g : groups) total += g.members.size();

        std::size_t in_train = 0;
        std::size_t next = 0;
        for (; next < groups.size(); ++next) {
            const double now = std::fabs(static_cast<double>(in_train) / total - ratio);
            const double after =
                std::fabs(static_cast<double>(in_train + groups[next].members.size()) / total - ratio);
            if (after > now) break;
            in_train += groups[next].members.size();
            send(groups[next], result.assignment.train);
        }
        for (; next < groups.size(); ++next) send(groups[next], result.assignment.test);
    }
    return result;
}

void write_assignment(const std::filesystem::path& path, const SplitAssignment& assignment,
                      const DatasetManifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path.string(), "cannot write split file");
    out << kAssignmentHeader << '\n';
    for (const auto& r : manifest.records) {
        const bool train = assignment.train.contains(r.image_id);
        const bool test = assignment.test.contains(r.image_id);
        if (!train && !test) throw ValidationError("image '" + r.image_id + "' is not assigned to either side");
        out << r.image_id << ',' << (train ? "train" : "test") << '\n';
    }
    if (!out) throw IoError(path.string(), "write failed");
}

SplitAssignment load_assignment(const std::filesystem::path& path, const DatasetManifest& manifest) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open split file");
    std::string line;
    if (!detail::next_line(in, line) || line != kAssignmentHeader)
        throw ParseError(1, "expected header '" + std::string(kAssignmentHeader) + "'");

    SplitAssignment a;
    a.ratio = 0.0;
    std::size_t line_no = 1;
    while (detail::next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() != 2) throw ParseError(line_no, "expected 2 fields");
        const auto& id = fields[0];
        if (!manifest.find(id)) throw ValidationError("line " + std::to_string(line_no) + ": unknown image '" + id + "'");
        if (a.train.contains(id) || a.test.contains(id))
            throw ValidationError("line " + std::to_string(line_no) + ": image '" + id + "' assigned twice");
        if (fields[1] == "train")
            a.train.insert(id);
        else if (fields[1] == "test")
            a.test.insert(id);
        else
            throw ParseError(line_no, "split must be 'train' or 'test', got '" + fields[1] + "'");
    }
    for (const auto& r : manifest.records)
        if (!a.train.contains(r.image_id) && !a.test.contains(r.image_id))
            throw ValidationError("image '" + r.image_id + "' missing from split file");
    const auto n = a.train.size() + a.test.size();
    a.ratio = n == 0 ? 0.0 : static_cast<double>(a.train.size()) / n;
    return a;
}

SplitReport split_report(const SplitAssignment& assignment, const DatasetManifest& manifest) {
    SplitReport report;
    report.ratio = assignment.ratio;
    report.seed = assignment.seed;

    const auto by_class = groups_by_class(manifest);
    for (int c = 0; c < kNumClasses; ++c) {
        if (by_class[c].empty()) continue;
        ClassSplitStats stats{static_cast<ClassLabel>(c)};
        for (const auto& g : by_class[c]) {
            std::size_t tr = 0, te = 0;
            for (const auto& id : g.members) {
                if (assignment.train.contains(id))
                    ++tr;
                else if (assignment.test.contains(id))
                    ++te;
            }
            stats.train_images += tr;
            stats.test_images += te;
            if (tr > 0 && te > 0) report.bisected_groups.push_back(g.id);
            if (tr > 0) ++stats.train_groups;
            if (te > 0) ++stats.test_groups;
        }
        const auto total = stats.train_images + stats.test_images;
        stats.achieved_ratio = total == 0 ? 0.0 : static_cast<double>(stats.train_images) / total;
        stats.warn = stats.train_images == 0 || stats.test_images == 0;
        if (stats.warn) {
            report.warnings.push_back("WARN class " + std::to_string(c) + " (" + std::string(class_name(stats.label)) +
                                      "): " + (stats.test_images == 0 ? "test" : "train") + " side empty");
        }
        report.train_images += stats.train_images;
        report.test_images += stats.test_images;
        report.train_groups += stats.train_groups;
        report.test_groups += stats.test_groups;
        report.classes.push_back(stats);
    }
    return report;
}

nlohmann::json SplitReport::to_json() const {
    nlohmann::json j;
    j["ratio"] = ratio;
    j["seed"] = seed;
    auto& rows = j["classes"] = nlohmann::json::array();
    for (const auto& c : classes) {
        rows.push_back({{"class_id", class_id(c.label)},
                        {"class_name", class_name(c.label)},
                        {"train_images", c.train_images},
                        {"test_images", c.test_images},
                        {"train_groups", c.train_groups},
                        {"test_groups", c.test_groups},
                        {"achieved_ratio", c.achieved_ratio},
                        {"status", c.warn ? "WARN" : "OK"}});
    }
    j["train_images"] = train_images;
    j["test_images"] = test_images;
    j["train_groups"] = train_groups;
    j["test_groups"] = test_groups;
    j["bisected_group_count"] = bisected_groups.size();
    j["bisected_groups"] = bisected_groups;
    j["warnings"] = warnings;
    return j;
}

std::string SplitReport::to_text() const {
    std::ostringstream out;
    out << std::left << std::setw(22) << "Class" << std::right << std::setw(7) << "Train" << std::setw(7) << "Test"
        << std::setw(9) << "Groups" << std::setw(9) << "Ratio" << "  Status\n";
    for (const auto& c : classes) {
        out << std::left << std::setw(22) << (std::to_string(class_id(c.label)) + " " + std::string(class_name(c.label)))
            << std::right << std::setw(7) << c.train_images << std::setw(7) << c.test_images << std::setw(4)
            << c.train_groups << "/" << std::left << std::setw(4) << c.test_groups << std::right << std::setw(9)
            << std::fixed << std::setprecision(4) << c.achieved_ratio << "  " << (c.warn ? "WARN" : "OK") << '\n';
    }
    out << std::left << std::setw(22) << "Total" << std::right << std::setw(7) << train_images << std::setw(7)
        << test_images << std::setw(4) << train_groups << "/" << std::left << std::setw(4) << test_groups << '\n';
    out << "bisected groups: " << bisected_groups.size() << '\n';
    for (const auto& w : warnings) out << w << '\n';
    return out.str();
}

}  // namespace dexray::dataset
