#include <fstream>

#include <json.hpp>

#include "seqadapt/data.hpp"
#include "seqadapt/errors.hpp"
#include "seqadapt/hash.hpp"

namespace seqadapt {

namespace {

void hash_dataset(Fnv1a64& hasher, const Dataset& dataset) {
    hasher.update_u64(dataset.size());
    for (const EventSequence& seq : dataset) {
        hasher.update(seq.patient_id);
        hasher.update_double(seq.window_hours);
        hasher.update_u64(seq.inputs.size());
        for (const BinaryVec& vec : seq.inputs) {
            hasher.update_u64(vec.size());
            for (std::int32_t index : vec.active()) hasher.update_i64(index);
        }
        hasher.update_u64(seq.targets.size());
        for (const BinaryVec& vec : seq.targets) {
            hasher.update_u64(vec.size());
            for (std::int32_t index : vec.active()) hasher.update_i64(index);
        }
    }
}

nlohmann::json dataset_to_json(const Dataset& dataset) {
    nlohmann::json out = nlohmann::json::array();
    for (const EventSequence& seq : dataset) {
        nlohmann::json inputs = nlohmann::json::array();
        for (const BinaryVec& vec : seq.inputs) inputs.push_back(vec.active());
        nlohmann::json targets = nlohmann::json::array();
        for (const BinaryVec& vec : seq.targets) targets.push_back(vec.active());
        out.push_back({{"patient_id", seq.patient_id},
                       {"inputs", std::move(inputs)},
                       {"targets", std::move(targets)}});
    }
    return out;
}

Dataset dataset_from_json(const nlohmann::json& doc, const EventVocabulary& vocab,
                          double window_hours) {
    Dataset dataset;
    for (const auto& entry : doc) {
        EventSequence seq;
        seq.patient_id = entry.at("patient_id").get<std::string>();
        seq.window_hours = window_hours;
        for (const auto& active : entry.at("inputs")) {
            seq.inputs.emplace_back(vocab.input_size(),
                                    active.get<std::vector<std::int32_t>>());
        }
        for (const auto& active : entry.at("targets")) {
            seq.targets.emplace_back(vocab.target_size(),
                                     active.get<std::vector<std::int32_t>>());
        }
        seq.validate(vocab.input_size(), vocab.target_size());
        dataset.push_back(std::move(seq));
    }
    return dataset;
}

} // namespace

std::uint64_t cohort_content_hash(const CohortArchive& archive) {
    Fnv1a64 hasher;
    hasher.update_u64(archive.vocabulary.content_hash());
    hasher.update_double(archive.window_hours);
    hash_dataset(hasher, archive.train);
    hash_dataset(hasher, archive.test);
    return hasher.digest();
}

void save_cohort(const std::string& path, CohortArchive& archive) {
    archive.content_hash = cohort_content_hash(archive);

    nlohmann::json ranges = nlohmann::json::object();
    for (const auto& [event_type, range] : archive.vocabulary.ranges) {
        ranges[event_type] = {range.low, range.high};
    }
    const nlohmann::json doc = {
        {"format", "cohort-archive"},
        {"version", 1},
        {"content_hash", to_hex(archive.content_hash)},
        {"window_hours", archive.window_hours},
        {"vocabulary",
         {{"input_names", archive.vocabulary.input_names},
          {"target_names", archive.vocabulary.target_names},
          {"ranges", std::move(ranges)},
          {"continuous_families", archive.vocabulary.continuous_families}}},
        {"train", dataset_to_json(archive.train)},
        {"test", dataset_to_json(archive.test)},
    };
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open cohort archive for writing: " + path);
    out << doc.dump(1) << '\n';
    if (!out) throw IoError("write failure for cohort archive: " + path);
}

CohortArchive load_cohort(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open cohort archive: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& error) {
        throw IoError("bad cohort archive " + path + ": " + error.what());
    }
    try {
        if (doc.value("format", "") != "cohort-archive" || doc.value("version", 0) != 1) {
            throw IoError("not a version-1 cohort archive: " + path);
        }
        CohortArchive archive;
        archive.window_hours = doc.at("window_hours").get<double>();
        const nlohmann::json& vocab = doc.at("vocabulary");
        archive.vocabulary.input_names =
            vocab.at("input_names").get<std::vector<std::string>>();
        archive.vocabulary.target_names =
            vocab.at("target_names").get<std::vector<std::string>>();
        for (const auto& [event_type, bounds] : vocab.at("ranges").items()) {
            archive.vocabulary.ranges[event_type] =
                ValueRange{bounds.at(0).get<double>(), bounds.at(1).get<double>()};
        }
        archive.vocabulary.continuous_families =
            vocab.at("continuous_families").get<std::set<std::string>>();
        archive.vocabulary.rebuild_index();
        archive.train = dataset_from_json(doc.at("train"), archive.vocabulary,
                                          archive.window_hours);
        archive.test =
            dataset_from_json(doc.at("test"), archive.vocabulary, archive.window_hours);

        const std::string stored = doc.at("content_hash").get<std::string>();
        archive.content_hash = cohort_content_hash(archive);
        if (to_hex(archive.content_hash) != stored) {
            throw IoError("cohort archive content hash mismatch: " + path);
        }
        return archive;
    } catch (const nlohmann::json::exception& error) {
        throw IoError("bad cohort archive " + path + ": " + error.what());
    }
}

} // namespace seqadapt
