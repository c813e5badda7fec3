"""Convert the raw UCI ``german.data`` file into the AIF360 feature layout.

Mirrors ``aif360.datasets.GermanDataset`` defaults: ``personal_status`` is
replaced by a binary ``sex`` column (male=1), ``age`` is binarized as
``age > 25`` (Old=1), the twelve categorical columns are one-hot encoded with
``name=value`` headers, and the label keeps its raw coding (1 = good credit,
2 = bad credit).

Usage::

    python scripts/build_german_csv.py data/german.data data/german_credit_aif360.csv
"""
import sys

import pandas as pd

COLUMNS = ['status', 'month', 'credit_history', 'purpose', 'credit_amount',
           'savings', 'employment', 'investment_as_income_percentage',
           'personal_status', 'other_debtors', 'residence_since', 'property',
           'age', 'installment_plans', 'housing', 'number_of_credits',
           'skill_level', 'people_liable_for', 'telephone', 'foreign_worker',
           'credit']

CATEGORICAL = ['status', 'credit_history', 'purpose', 'savings', 'employment',
               'other_debtors', 'property', 'installment_plans', 'housing',
               'skill_level', 'telephone', 'foreign_worker']

MALE_STATUS = {'A91', 'A93', 'A94'}


def build(raw_path):
    df = pd.read_csv(raw_path, sep=' ', header=None, names=COLUMNS)
    df['sex'] = df['personal_status'].isin(MALE_STATUS).astype(float)
    df = df.drop(columns=['personal_status'])
    df['age'] = (df['age'] > 25).astype(float)
    df = pd.get_dummies(df, columns=CATEGORICAL, prefix_sep='=', dtype=float)
    label = df.pop('credit')
    df['credit'] = label
    return df


def main(argv):
    if len(argv) != 3:
        print(__doc__)
        return 2
    df = build(argv[1])
    df.to_csv(argv[2], index=False, float_format='%.17g')
    print(f'wrote {argv[2]}: {df.shape[0]} rows, {df.shape[1] - 1} features')
    return 0


if __name__ == '__main__':
    sys.exit(main(sys.argv))
