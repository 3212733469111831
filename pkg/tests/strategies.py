"""Hypothesis strategies for records and logs."""

from hypothesis import strategies as st

from ledgerlens.model import STATUSES, BlockchainLog, NetworkConfig, RangeRead, TransactionRecord, derive_transaction_type

# includes every character the canonical CSV escapes, plus commas and quotes
TEXT = st.text(alphabet=st.sampled_from("abcXYZ09_-.%;@=|[]~,\" "), max_size=8)
KEYS = st.sampled_from([f"k_{i}" for i in range(8)])
ORGS = ["Org1", "Org2", "Org3", "Org4"]


@st.composite
def records(draw, co=0, block=1, ts=0.0, keys=KEYS, text=TEXT, activities=("A", "B", "C")):
    reads = tuple(draw(st.dictionaries(keys, st.integers(0, 5), max_size=3)).items())
    writes = tuple(draw(st.dictionaries(keys, text, max_size=3)).items())
    ranges = ()
    if draw(st.booleans()) and draw(st.booleans()):
        obs = tuple(sorted(draw(st.dictionaries(keys, st.integers(0, 5), max_size=3)).items()))
        ranges = (RangeRead("k_0", "k_9", obs),)
    if not reads and not writes and not ranges:
        reads = ((draw(keys), 0),)
    status = draw(st.sampled_from(STATUSES))
    if status == "phantom_read_conflict" and not ranges:
        status = "mvcc_read_conflict"
    orgs = draw(st.lists(st.sampled_from(ORGS), min_size=1, max_size=4, unique=True))
    inv = draw(st.sampled_from(ORGS))
    return TransactionRecord(
        client_ts=ts,
        activity=draw(st.sampled_from(activities)),
        args=tuple(draw(st.lists(text, max_size=3))),
        endorsers=tuple(f"{o}.peer{draw(st.integers(0, 1))}" for o in orgs),
        invoker_client=f"{inv}.client{draw(st.integers(0, 2))}",
        invoker_org=inv,
        read_set=reads,
        write_set=writes,
        range_reads=ranges,
        status=status,
        tx_type=derive_transaction_type(reads, writes, ranges),
        commit_order=co,
        block_number=block,
    )


@st.composite
def logs(draw, min_size=1, max_size=40, text=TEXT, activities=("A", "B", "C")):
    n = draw(st.integers(min_size, max_size))
    gaps = draw(st.lists(st.floats(0, 3000, allow_nan=False), min_size=n, max_size=n))
    cuts = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    recs = []
    ts, block = 0.0, 1
    for i in range(n):
        ts += gaps[i]
        if i and cuts[i]:
            block += 1
        recs.append(draw(records(co=i, block=block, ts=ts, text=text, activities=activities)))
    cfg = NetworkConfig(draw(st.integers(1, 500)), 1.0, "OutOf(2,Org1,Org2,Org3,Org4)")
    return BlockchainLog.from_records(recs, cfg)
