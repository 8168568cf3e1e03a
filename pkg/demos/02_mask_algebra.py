#!/usr/bin/env python3
# Mask algebra: expanding a label-rate mask onto audio, selecting frames,
# and the on-disk record format.

from framedrop import BinaryMask, MaskRecord, apply, drop_rate, expand
from framedrop.mask_ops import parse, serialize

print("A mask lives at label rate; audio needs it expanded r times.")
mask = BinaryMask.from_string("1011")
print(f"  label mask        {mask.to_string()}")
print(f"  expanded (r=3)    {expand(mask, 3).to_string()}")
print(f"  drop rate         {drop_rate(mask)} (preserved: {drop_rate(expand(mask, 3))})")

print("\nSelection keeps exactly the frames whose bit is 1:")
frames = ["y1", "y2", "y3", "y4", "y5"]
selected = apply(BinaryMask.from_string("01101"), frames)
print(f"  01101 over {frames} -> {selected}")

print("\nEach sampled mask serializes as one JSON line with its seed,")
print("so any record regenerates its own bits:")
record = MaskRecord(track_id="trk", p_n=0.9, p_l=0.1, seed=7, bits="1011")
line = serialize(record)
print(f"  {line}")
print(f"  round-trips: {parse(line) == record}")
