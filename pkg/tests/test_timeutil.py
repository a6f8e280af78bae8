import pytest

from castorlite.errors import InvalidFrequency, MalformedSchedule
from castorlite.timeutil import (
    FrequencySpec,
    bucket_start,
    format_rfc3339,
    parse_repeat_every,
    parse_rfc3339,
)


def test_rfc3339_round_trip():
    text = "2019-03-01T00:00:00+00:00"
    assert format_rfc3339(parse_rfc3339(text)) == text


def test_rfc3339_normalizes_offsets_to_utc():
    assert parse_rfc3339("2019-03-01T02:00:00+02:00") == parse_rfc3339(
        "2019-03-01T00:00:00+00:00"
    )
    assert parse_rfc3339("2019-03-01T00:00:00Z") == parse_rfc3339(
        "2019-03-01T00:00:00+00:00"
    )


@pytest.mark.parametrize(
    "text,count,unit,seconds",
    [
        ("15T", 15, "minute", 900),
        ("1H", 1, "hour", 3600),
        ("2D", 2, "day", 172800),
        ("24H", 24, "hour", 86400),
    ],
)
def test_frequency_parse(text, count, unit, seconds):
    spec = FrequencySpec.parse(text)
    assert (spec.count, spec.unit, spec.seconds) == (count, unit, seconds)


@pytest.mark.parametrize("bad", ["", "T", "15", "15X", "-5T", "0H"])
def test_frequency_parse_rejects(bad):
    with pytest.raises(InvalidFrequency):
        FrequencySpec.parse(bad)


@pytest.mark.parametrize(
    "text,seconds",
    [
        ("1_week", 604_800),
        ("1_hours", 3_600),
        ("90_minutes", 5_400),
        ("2_days", 172_800),
        ("1_minute", 60),
    ],
)
def test_parse_repeat_every(text, seconds):
    assert parse_repeat_every(text) == seconds


@pytest.mark.parametrize("bad", ["week", "1week", "1_fortnights", "0_hours", ""])
def test_parse_repeat_every_rejects(bad):
    with pytest.raises(MalformedSchedule):
        parse_repeat_every(bad)


def test_bucket_anchored_at_midnight_utc():
    midnight = parse_rfc3339("2019-03-01T00:00:00+00:00")
    freq = FrequencySpec.parse("15T")
    assert bucket_start(midnight, freq) == midnight
    assert bucket_start(midnight + 7 * 60, freq) == midnight
    assert bucket_start(midnight + 15 * 60, freq) == midnight + 900
