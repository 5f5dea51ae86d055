#include <doctest.h>

#include "curate/batch.hpp"
#include "support/synth.hpp"

using namespace curate;

namespace {

bool same(const FilterReport& a, const FilterReport& b) {
    return a.doc_id == b.doc_id && a.decision == b.decision && a.discard_reasons == b.discard_reasons;
}

}  // namespace

TEST_CASE("code filtering batch matches a sequential run") {
    const auto docs = synth::pipeline_corpus(5, 600);
    const auto registry = code::RuleRegistry::defaults();

    code::DedupIndex seq_index(3);
    std::vector<FilterReport> sequential;
    for (const auto& d : docs) sequential.push_back(code::run_code_pipeline(d, registry, seq_index));

    code::DedupIndex serial_index(3);
    code::DedupIndex parallel_index(3);
    const int saved = thread_count();
    set_thread_count(3);
    const auto serial = filter_code_batch(docs, registry, serial_index, {}, Execution::Serial);
    const auto parallel = filter_code_batch(docs, registry, parallel_index, {}, Execution::Parallel);
    set_thread_count(saved);

    REQUIRE(serial.size() == docs.size());
    REQUIRE(parallel.size() == docs.size());
    std::size_t kept = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        CHECK(same(serial[i], sequential[i]));
        CHECK(same(parallel[i], sequential[i]));
        kept += sequential[i].decision == Decision::Keep;
    }
    CHECK(kept > 0);
    CHECK(serial_index.function_count() == seq_index.function_count());
    CHECK(parallel_index.function_count() == seq_index.function_count());
}

TEST_CASE("math validation batch matches per-document calls") {
    const auto docs = synth::pipeline_corpus(6, 300);
    const auto serial = validate_math_batch(docs, {}, Execution::Serial);
    const auto parallel = validate_math_batch(docs, {}, Execution::Parallel);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto v = math::validate_math(docs[i].text);
        CHECK(serial[i].issues == v.issues);
        CHECK(parallel[i].issues == v.issues);
        CHECK(parallel[i].decision == v.decision);
    }
}

TEST_CASE("domain batch builds the boilerplate index once") {
    const auto docs = synth::pipeline_corpus(7, 400);
    const auto serial = classify_domain_batch(docs, {}, Execution::Serial);
    const auto parallel = classify_domain_batch(docs, {}, Execution::Parallel);

    domain::BoilerplateIndex index(5);
    for (const auto& d : docs) index.add_document(d.text);
    domain::DomainOptions opt;
    opt.boilerplate = &index;
    std::map<DomainLabel, std::size_t> labels;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto expected = domain::categorize_domain(docs[i], opt);
        CHECK(serial[i].label == expected);
        CHECK(parallel[i].label == expected);
        CHECK(parallel[i].density == serial[i].density);
        ++labels[expected];
    }
    CHECK(labels.size() >= 5);
}
