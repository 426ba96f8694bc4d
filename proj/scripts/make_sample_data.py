#!/usr/bin/env python3
"""Generates the bundled sample dataset: a small two-asset market with
savers, levered borrowers and a WETH drawdown that liquidates the thin
positions (with post-liquidation recovery activity, so every event pair has
observations). Deterministic; rerunning reproduces data/ byte for byte."""

import csv
import math
import random

random.seed(20240601)

T0 = 1672531200  # 2023-01-01
DAY = 86400
SPAN_DAYS = 180
DRAWDOWN = (50, 70)  # days of the WETH slide

def weth_price(t):
    days = (t - T0) / DAY
    base = 2000.0 * (1.0 + 0.08 * math.sin(days / 19.0))
    if DRAWDOWN[0] <= days <= DRAWDOWN[1]:
        base *= 0.62
    return round(base * random.uniform(0.995, 1.005), 2)

rows = []

def add(t, user, kind, asset, amount, price):
    usd = round(amount * price, 6)
    liq_repaid = usd if kind == "liquidation" else ""
    liq_seized = round(usd * 1.05, 6) if kind == "liquidation" else ""
    rows.append([t, user, kind, asset, round(amount, 8), usd, price, liq_repaid, liq_seized])

for u in range(40):
    user = f"user{u:02d}"
    t = T0 + u * 3600 + random.randint(0, 7200)
    style = u % 4  # 0 saver, 1 steady borrower, 2 trader, 3 risky borrower
    debt_open = 0.0
    liquidated = False
    recovery = []  # scripted post-liquidation actions
    for i in range(random.randint(20, 28)):
        t += random.randint(12 * 3600, 7 * DAY)
        if t > T0 + SPAN_DAYS * DAY:
            break
        px = weth_price(t)
        days = (t - T0) / DAY
        roll = random.random()

        if recovery:
            kind = recovery.pop(0)
            if kind in ("deposit", "withdraw"):
                add(t, user, kind, "WETH", random.uniform(0.05, 0.4), px)
            elif kind == "borrow":
                debt_open += 150.0
                add(t, user, "borrow", "USDC", 150.0, 1.0)
            elif kind == "liquidation":
                add(t, user, "liquidation", "USDC", max(debt_open * 0.5, 20.0), 1.0)
                debt_open *= 0.5
            else:
                repay = min(debt_open, random.uniform(40, 160)) if debt_open else 50.0
                debt_open = max(0.0, debt_open - repay)
                add(t, user, "repay", "USDC", max(repay, 10.0), 1.0)
            continue

        if style == 0:
            kind = "deposit" if roll < 0.7 else "withdraw"
            add(t, user, kind, "WETH", random.uniform(0.2, 2.0), px)
        elif style == 1:
            if roll < 0.35:
                add(t, user, "deposit", "WETH", random.uniform(0.5, 1.5), px)
            elif roll < 0.65:
                amt = random.uniform(200, 900)
                debt_open += amt
                add(t, user, "borrow", "USDC", amt, 1.0)
            else:
                amt = random.uniform(100, max(150, debt_open * 0.5))
                debt_open = max(0.0, debt_open - amt)
                add(t, user, "repay", "USDC", amt, 1.0)
        elif style == 2:
            kind = ["deposit", "withdraw", "borrow", "repay"][int(roll * 4) % 4]
            asset = "WETH" if roll < 0.5 else "USDC"
            price = px if asset == "WETH" else 1.0
            amount = random.uniform(0.1, 1.2) if asset == "WETH" else random.uniform(50, 600)
            add(t, user, kind, asset, amount, price)
        else:
            if i == 0:
                add(t, user, "deposit", "WETH", random.uniform(0.8, 1.4), px)
            elif i == 1:
                amt = random.uniform(900, 1500)
                debt_open = amt
                add(t, user, "borrow", "USDC", amt, 1.0)
            elif not liquidated and debt_open > 0 and days >= DRAWDOWN[0]:
                add(t, user, "liquidation", "USDC", debt_open * 0.5, 1.0)
                debt_open *= 0.5
                liquidated = True
                # scripted recovery touches every event type after the index
                recovery = ["deposit", "repay", "borrow", "withdraw"]
                if u % 8 == 3:
                    recovery.insert(2, "liquidation")
            elif roll < 0.35:
                add(t, user, "deposit", "WETH", random.uniform(0.1, 0.4), px)
            elif roll < 0.55 and debt_open > 0:
                repay = min(debt_open, random.uniform(30, 120))
                debt_open -= repay
                add(t, user, "repay", "USDC", repay, 1.0)
            elif roll < 0.7:
                add(t, user, "withdraw", "WETH", random.uniform(0.02, 0.1), px)
            else:
                amt = random.uniform(50, 300)
                debt_open += amt
                add(t, user, "borrow", "USDC", amt, 1.0)

rows.sort(key=lambda r: r[0])

with open("data/sample_transactions.csv", "w", newline="") as f:
    w = csv.writer(f)
    w.writerow(["timestamp", "user_id", "event_type", "asset", "amount", "amount_usd",
                "price_usd", "liq_debt_repaid_usd", "liq_collateral_seized_usd"])
    w.writerows(rows)

print(f"wrote {len(rows)} rows")
