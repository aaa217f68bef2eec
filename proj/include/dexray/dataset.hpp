#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dexray::dataset {

// Weapon category. Ids are fixed: 0 Assault Rifle, 1 Revolver,
// 2 Self-Loading Pistol, 3 Shotgun, 4 Sub-Machine Gun.
enum class ClassLabel : int {
    AssaultRifle = 0,
    Revolver = 1,
    SelfLoadingPistol = 2,
    Shotgun = 3,
    SubMachineGun = 4,
};

inline constexpr int kNumClasses = 5;

inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses{
    ClassLabel::AssaultRifle, ClassLabel::Revolver, ClassLabel::SelfLoadingPistol, ClassLabel::Shotgun,
    ClassLabel::SubMachineGun};

constexpr int class_id(ClassLabel label) { return static_cast<int>(label); }
std::string_view class_name(ClassLabel label);
std::optional<ClassLabel> class_from_id(int id);
std::optional<ClassLabel> class_from_name(std::string_view name);

struct ImageRecord {
    std::string image_id;
    std::filesystem::path path;  // as written in the manifest; relative paths resolve against base_dir
    ClassLabel label = ClassLabel::AssaultRifle;
    std::string imagegroup_id;

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct DatasetManifest {
    std::vector<ImageRecord> records;
    std::string source;
    std::filesystem::path base_dir;

    // Throws ValidationError on duplicate ids or mixed-class groups.
    void validate() const;

    const ImageRecord* find(std::string_view image_id) const;
    std::filesystem::path resolve(const ImageRecord& record) const;
};

inline constexpr std::string_view kManifestHeader = "image_id,path,class_id,imagegroup_id";

// Throws IoError, ParseError (with line number) or ValidationError.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(std::istream& in, std::string source);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct SplitAssignment {
    std::set<std::string> train;
    std::set<std::string> test;
    std::uint64_t seed = 0;
    double ratio = 0.7;

    bool in_train(const std::string& image_id) const { return train.contains(image_id); }
};

// A class with only one imagegroup; the group is placed in train.
struct DegenerateClass {
    ClassLabel label;
    std::string imagegroup_id;
    std::size_t images = 0;
};

struct SplitResult {
    SplitAssignment assignment;
    std::vector<DegenerateClass> degenerate;
};

// Whole-group stratified split. Per class, groups are taken in first-seen
// manifest order and shuffled with a stream derived from seed; groups are
// then added to train while doing so does not move the class's train
// fraction farther from ratio, and the rest go to test.
SplitResult stratified_group_split(const DatasetManifest& manifest, double ratio, std::uint64_t seed);

inline constexpr std::string_view kAssignmentHeader = "image_id,split";

void write_assignment(const std::filesystem::path& path, const SplitAssignment& assignment,
                      const DatasetManifest& manifest);

// Throws ParseError for malformed rows and ValidationError for ids that are
// unknown, repeated, or missing. Group bisection is not an error here; it is
// surfaced by split_report.
SplitAssignment load_assignment(const std::filesystem::path& path, const DatasetManifest& manifest);

struct ClassSplitStats {
    ClassLabel label;
    std::size_t train_images = 0;
    std::size_t test_images = 0;
    std::size_t train_groups = 0;
    std::size_t test_groups = 0;
    double achieved_ratio = 0.0;
    bool warn = false;  // one side empty
};

struct SplitReport {
    double ratio = 0.0;
    std::uint64_t seed = 0;
    std::vector<ClassSplitStats> classes;
    std::size_t train_images = 0;
    std::size_t test_images = 0;
    std::size_t train_groups = 0;
    std::size_t test_groups = 0;
    std::vector<std::string> bisected_groups;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
    std::string to_text() const;
};

SplitReport split_report(const SplitAssignment& assignment, const DatasetManifest& manifest);

}  // namespace dexray::dataset
