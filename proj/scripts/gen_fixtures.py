#!/usr/bin/env python3
"""Regenerates the committed desk-scale fixture (composite.json + stimulus)
and the 64-cycle toy stimuli. Output is deterministic; run from the repo
root. The generated files are committed so builds never depend on Python."""

import json
import os

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "circuits")


class Lcg:
    def __init__(self, seed):
        self.state = seed & 0xFFFFFFFFFFFFFFFF

    def bit(self):
        self.state = (self.state * 6364136223846793005 + 1442695040888963407) & 0xFFFFFFFFFFFFFFFF
        return (self.state >> 33) & 1


def build_composite():
    cells = []

    def cell(name, ctype, **pins):
        cells.append({"name": name, "type": ctype, "pins": pins})

    def dff(name, d, q, strength=1, reset=None):
        ctype = "DFFR" if reset else "DFF"
        if strength != 1:
            ctype += f"_X{strength}"
        pins = {"D": d, "CK": "clk", "Q": q}
        if reset:
            pins["RN"] = reset
        cells.append({"name": name, "type": ctype, "pins": pins})

    # Chain gating masks. An upset survives a masked stage only while the
    # mask is high, so the failure probability decays with the remaining
    # chain length: deep stages rarely reach an output, late stages almost
    # always do.
    cell("U_mska", "OR2", A="din1", B="cnt0", Y="mska")
    cell("U_mskb", "OR2", A="din2", B="fsm2q", Y="mskb")

    # Transmit shift chain, 16 masked stages. Even stages use stronger
    # drivers so drive strength is not constant across the chain.
    prev = "din0"
    for i in range(16):
        if i > 0:
            cell(f"U_txg{i}", "AND2", A=prev, B="mska", Y=f"txg{i}")
            prev = f"txg{i}"
        dff(f"tx_reg_{i}_", prev, f"tx{i}", strength=2 if i % 2 == 0 else 1)
        prev = f"tx{i}"

    # Receive chain, 12 masked stages, seeded by transmit feedback.
    cell("U_rxin", "XOR2", A="din1", B="tx15", Y="rxd")
    prev = "rxd"
    for i in range(12):
        if i > 0:
            cell(f"U_rxg{i}", "AND2", A=prev, B="mskb", Y=f"rxg{i}")
            prev = f"rxg{i}"
        dff(f"rx_reg_{i}_", prev, f"rx{i}")
        prev = f"rx{i}"

    # Header chain, 9 stages gated by the slow mode square wave: an upset
    # either dies at the first stage or marches all the way through.
    cell("U_hdrin", "AND2", A="din2", B="mode", Y="hdrd")
    prev = "hdrd"
    for i in range(9):
        if i > 0:
            cell(f"U_hdrg{i}", "AND2", A=prev, B="mode", Y=f"hdrg{i}")
            prev = f"hdrg{i}"
        dff(f"hdr_reg_{i}_", prev, f"hdr{i}")
        prev = f"hdr{i}"

    # 10-bit ripple-carry counter, enabled by load.
    cell("U_cx0", "XOR2", A="cnt0", B="load", Y="cd0")
    cell("U_ca0", "AND2", A="load", B="cnt0", Y="cc0")
    dff("cnt_reg[0]", "cd0", "cnt0")
    for i in range(1, 10):
        cell(f"U_cx{i}", "XOR2", A=f"cnt{i}", B=f"cc{i-1}", Y=f"cd{i}")
        if i < 9:
            cell(f"U_ca{i}", "AND2", A=f"cc{i-1}", B=f"cnt{i}", Y=f"cc{i}")
        dff(f"cnt_reg[{i}]", f"cd{i}", f"cnt{i}", strength=4 if i >= 8 else 1)

    # Two recirculating data banks behind 2:1 muxes; bank 1 is resettable.
    # The upper half of bank 0 reloads at half rate, so upsets there linger
    # longer and are caught by the parity strobe more often.
    cell("U_ldm", "AND2", A="load", B="mode", Y="ldm")
    for i in range(14):
        s = "load" if i < 7 else "ldm"
        cell(f"U_m0_{i}", "MUX2", A=f"d0q{i}", B=f"tx{i % 16}", S=s, Y=f"d0d{i}")
        dff(f"dat0_reg[{i}]", f"d0d{i}", f"d0q{i}")
    for i in range(14):
        cell(f"U_m1_{i}", "MUX2", A=f"d1q{i}", B=f"rx{i % 12}", S="sel", Y=f"d1d{i}")
        dff(f"dat1_reg[{i}]", f"d1d{i}", f"d1q{i}", reset="rstn")

    # Small control FSM; bit 2 toggles against itself.
    cell("U_f0", "XOR2", A="fsm1q", B="mode", Y="fsm0d")
    cell("U_f1", "AND2", A="fsm0q", B="load", Y="fsm1d")
    cell("U_f2n", "NOT", A="fsm2q", Y="nfsm2")
    cell("U_f2", "OR2", A="fsm1q", B="nfsm2", Y="fsm2d")
    dff("fsm_reg[0]", "fsm0d", "fsm0q", reset="rstn")
    dff("fsm_reg[1]", "fsm1d", "fsm1q", reset="rstn")
    dff("fsm_reg[2]", "fsm2d", "fsm2q", reset="rstn")

    # Shadow bank: structurally wired into the output parity but masked by a
    # constant, so upsets in it never reach an output.
    cell("T_zero", "TIE0", Y="z0")
    for i in range(6):
        cell(f"U_sin{i}", "AND2", A="z0", B=f"d0q{i}", Y=f"shd{i}")
        dff(f"shadow_reg_{i}_", f"shd{i}", f"shq{i}")
        cell(f"U_sw{i}", "AND2", A="z0", B=f"shq{i}", Y=f"sw{i}")
    cell("U_sp0", "XOR2", A="sw0", B="sw1", Y="sp0")
    cell("U_sp1", "XOR2", A="sp0", B="sw2", Y="sp1")
    cell("U_sp2", "XOR2", A="sp1", B="sw3", Y="sp2")
    cell("U_sp3", "XOR2", A="sp2", B="sw4", Y="sp3")
    cell("U_sp4", "XOR2", A="sp3", B="sw5", Y="shpar")

    # Loose flip-flops.
    dff("dbg_ff0", "tx7", "dbg0q")           # observe-only tap, Q dangles
    dff("sync_ff", "mode", "syncq")
    cell("U_dbg1", "XOR2", A="d1q3", B="din3", Y="dbg1d")
    dff("dbg_ff1", "dbg1d", "dbg1q", reset="rstn")
    cell("U_errin", "AND2", A="rx11", B="hdr8", Y="errev")
    cell("U_error", "OR2", A="errq", B="errev", Y="errd")
    dff("err_ff", "errd", "errq", reset="rstn")

    # Output cone. The bank parities are sampled through strobes rather than
    # watched continuously: a lingering upset is only a failure if a strobe
    # lands while it is still in flight.
    cell("U_sa0", "AND2", A="din0", B="din3", Y="sa0")
    cell("U_sa1", "AND2", A="din1", B="cnt1", Y="sa1")
    cell("U_stra", "AND2", A="sa0", B="sa1", Y="stra")
    cell("U_strb", "XOR2", A="din3", B="cnt2", Y="strb")
    cell("U_p0a", "XOR2", A="rx11", B="hdr8", Y="p0a")
    cell("U_p0b", "XOR2", A="tx15", B="p0a", Y="pout0")
    cell("U_p1a", "XOR2", A="cnt3", B="fsm1q", Y="p1a")
    cell("U_p1b", "XOR2", A="cnt0", B="p1a", Y="pout1")
    prev = "d0q0"
    for i in range(1, 14):
        cell(f"U_p2_{i}", "XOR2", A=prev, B=f"d0q{i}", Y=f"p2_{i}")
        prev = f"p2_{i}"
    cell("U_p2g", "AND2", A=prev, B="stra", Y="pout2")
    prev = "d1q0"
    for i in range(1, 14):
        cell(f"U_p3_{i}", "XOR2", A=prev, B=f"d1q{i}", Y=f"p3_{i}")
        prev = f"p3_{i}"
    cell("U_p3g", "AND2", A=prev, B="strb", Y="pout3")
    cell("U_p4", "BUF", A="errq", Y="pout4")
    cell("U_d1", "AND2", A="cnt5", B="syncq", Y="dn0")
    cell("U_d2", "AND2", A="cnt7", B="dn0", Y="done")
    cell("U_p5a", "XOR2", A="shpar", B="done", Y="p5a")
    cell("U_p5s", "XOR2", A="p5a", B="syncq", Y="p5s")
    cell("U_p5b", "XOR2", A="dbg1q", B="p5s", Y="pout5")

    return {
        "version": 1,
        "name": "composite",
        "clock": "clk",
        "inputs": ["clk", "din0", "din1", "din2", "din3", "load", "mode", "sel", "rstn"],
        "outputs": ["pout0", "pout1", "pout2", "pout3", "pout4", "pout5"],
        "cells": cells,
        "constants": {},
    }


def composite_stimulus(cycles=256):
    rng = Lcg(0x00C0FFEE)
    rows = ["din0,din1,din2,din3,load,mode,sel,rstn"]
    for c in range(cycles):
        din = [rng.bit() for _ in range(4)]
        load = 1 if c % 17 < 2 else 0
        mode = (c // 64) % 2
        sel = rng.bit()
        rstn = 0 if c in (3, 130) else 1
        rows.append(",".join(str(v) for v in din + [load, mode, sel, rstn]))
    return "\n".join(rows) + "\n"


def toy_stimuli():
    out = {}
    rng = Lcg(0xD15EA5E)
    out["shift3_stim64.csv"] = "si\n" + "".join(f"{rng.bit()}\n" for _ in range(64))
    out["gated_stim64.csv"] = "a,b\n" + "".join(
        f"{rng.bit()},{rng.bit()}\n" for _ in range(64))
    out["deadend_stim64.csv"] = "x\n" + "".join(f"{rng.bit()}\n" for _ in range(64))
    out["bus4_stim64.csv"] = "en\n" + "1\n" * 64
    out["toggle_stim64.csv"] = "cycle\n" + "".join(f"{c}\n" for c in range(64))
    out["ring3_stim64.csv"] = "cycle\n" + "".join(f"{c}\n" for c in range(64))
    return out


def main():
    netlist = build_composite()
    with open(os.path.join(OUT, "composite.json"), "w") as fh:
        json.dump(netlist, fh, indent=1)
        fh.write("\n")
    with open(os.path.join(OUT, "composite_stim.csv"), "w") as fh:
        fh.write(composite_stimulus())
    for name, text in toy_stimuli().items():
        with open(os.path.join(OUT, name), "w") as fh:
            fh.write(text)
    nff = sum(1 for c in netlist["cells"] if c["type"].startswith("DFF"))
    print(f"composite: {len(netlist['cells'])} cells, {nff} flip-flops")


if __name__ == "__main__":
    main()
