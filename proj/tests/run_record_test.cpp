#include "greenprompt/run_record.hpp"

#include <doctest.h>

using namespace greenprompt;

namespace {

RunRecord sample_ok_record() {
    RunRecord r;
    r.snippet_id = "snip_01";
    r.pet = Pet::one_shot();
    r.config = ConfigId::C2;
    r.repetition = 3;
    r.question.messages.push_back({"system", "sys"});
    r.question.messages.push_back({"user", "usr"});
    r.answer = "public final class X {";
    r.measurement.gpu_energy_kwh = 1.25e-5;
    r.measurement.duration_s = 1.75;
    r.measurement.cpu_energy_kwh = 3.0e-6;
    r.scored.raw = r.answer;
    r.scored.normalized = "public final class X {";
    r.scored.distance = 2;
    r.scored.exact = true;
    r.scored.uncontrolled = false;
    r.status = RunStatus::ok;
    r.latency_s = 1.7;
    r.dispatched_at = "2026-01-05T10:00:00Z";
    r.completed_at = "2026-01-05T10:00:02Z";
    r.dispatch_monotonic_s = 12.5;
    r.epoch = 1;
    return r;
}

} // namespace

TEST_SUITE("run_record") {

TEST_CASE("ok record round-trips through JSON") {
    const RunRecord original = sample_ok_record();
    const RunRecord back = run_record_from_json(to_json(original));

    CHECK(back.snippet_id == original.snippet_id);
    CHECK(back.pet == original.pet);
    CHECK(back.config == original.config);
    CHECK(back.repetition == original.repetition);
    CHECK(back.question == original.question);
    CHECK(back.answer == original.answer);
    CHECK(back.measurement.gpu_energy_kwh ==
          doctest::Approx(original.measurement.gpu_energy_kwh));
    CHECK(back.measurement.duration_s == doctest::Approx(original.measurement.duration_s));
    REQUIRE(back.measurement.cpu_energy_kwh.has_value());
    CHECK(*back.measurement.cpu_energy_kwh ==
          doctest::Approx(*original.measurement.cpu_energy_kwh));
    CHECK(back.scored.normalized == original.scored.normalized);
    CHECK(back.scored.distance == original.scored.distance);
    CHECK(back.scored.exact == original.scored.exact);
    CHECK(back.scored.uncontrolled == original.scored.uncontrolled);
    CHECK(back.scored.raw == original.answer); // raw re-derived from answer
    CHECK(back.status == RunStatus::ok);
    CHECK(back.latency_s == doctest::Approx(original.latency_s));
    CHECK(back.dispatched_at == original.dispatched_at);
    CHECK(back.completed_at == original.completed_at);
    CHECK(back.dispatch_monotonic_s == doctest::Approx(original.dispatch_monotonic_s));
    CHECK(back.epoch == original.epoch);
}

TEST_CASE("failed record omits measurement and scoring") {
    RunRecord failed;
    failed.snippet_id = "snip_02";
    failed.pet = Pet::zero_shot();
    failed.config = ConfigId::C0;
    failed.repetition = 0;
    failed.question.messages.push_back({"system", "sys"});
    failed.status = RunStatus::failed;
    failed.error = "endpoint unreachable after 3 attempts";

    const auto j = to_json(failed);
    CHECK(!j.contains("measurement"));
    CHECK(!j.contains("scored"));
    CHECK(!j.contains("latency_s"));
    CHECK(j.at("error") == failed.error);

    const RunRecord back = run_record_from_json(j);
    CHECK(back.status == RunStatus::failed);
    CHECK(back.error == failed.error);
}

TEST_CASE("ok record without cpu energy stays without it") {
    RunRecord r = sample_ok_record();
    r.measurement.cpu_energy_kwh.reset();
    const RunRecord back = run_record_from_json(to_json(r));
    CHECK(!back.measurement.cpu_energy_kwh.has_value());
}

TEST_CASE("scored raw text is not duplicated in the serialization") {
    const auto j = to_json(sample_ok_record());
    CHECK(!j.at("scored").contains("raw"));
}

TEST_CASE("chat prompt serialization preserves order and roles") {
    ChatPrompt prompt;
    prompt.messages.push_back({"system", "a"});
    prompt.messages.push_back({"user", "b"});
    prompt.messages.push_back({"assistant", "c"});
    prompt.messages.push_back({"user", "d"});

    const auto back = chat_prompt_from_json(to_json(prompt));
    CHECK(back == prompt);
}

TEST_CASE("pet serialization keeps custom shot counts") {
    const Pet pet{PetKind::few_shot, 7};
    const Pet back = pet_from_json(to_json(pet));
    CHECK(back == pet);
}

} // TEST_SUITE
