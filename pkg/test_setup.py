#!/usr/bin/env python3
"""
Environment check for the phase-transfer workbench
Validates that the dependencies and package modules import and the config files are in place
"""

import sys
import importlib
from pathlib import Path

ROOT = Path(__file__).parent

def check_imports():
    """Check third-party imports"""
    print("Testing dependencies...")

    modules_to_test = [
        'numpy',
        'scipy.sparse',
        'scipy.sparse.linalg',
        'scipy.spatial.distance',
        'sklearn.ensemble',
        'sklearn.preprocessing',
        'sklearn.model_selection',
        'pandas',
        'joblib',
        'tqdm',
    ]

    failed_imports = []

    for module in modules_to_test:
        try:
            importlib.import_module(module)
            print(f"✓ {module}")
        except ImportError as e:
            print(f"✗ {module}: {e}")
            failed_imports.append(module)

    return failed_imports

def check_package():
    """Check that every pipeline module imports"""
    print("\nTesting package modules...")

    sys.path.insert(0, str(ROOT))
    package_modules = [
        'phase_transfer.model',
        'phase_transfer.dataset',
        'phase_transfer.forest',
        'phase_transfer.encode',
        'phase_transfer.qnn',
        'phase_transfer.knn',
        'phase_transfer.boundary',
        'phase_transfer.pipeline',
        'phase_transfer.cli',
    ]

    failed_modules = []

    for module in package_modules:
        try:
            importlib.import_module(module)
            print(f"✓ {module}")
        except Exception as e:
            print(f"✗ {module}: {e}")
            failed_modules.append(module)

    return failed_modules

def check_file_structure():
    """Check that required files exist"""
    print("\nTesting file structure...")

    required_files = [
        'requirements.txt',
        'README.md',
        'run_pipeline.py',
        'configs/smoke.ini',
        'configs/full.ini',
        'phase_transfer/__main__.py',
    ]

    missing_files = []

    for file_path in required_files:
        if (ROOT / file_path).exists():
            print(f"✓ {file_path}")
        else:
            print(f"✗ {file_path}")
            missing_files.append(file_path)

    return missing_files

def check_worked_instance():
    """Run the 10-qubit worked instance through the simulator"""
    print("\nTesting circuit simulator...")

    try:
        from phase_transfer.qnn import analytic_probabilities, classify, worked_instance
        sample, training = worked_instance("0000")
        result = classify(sample, training)
        oracle = analytic_probabilities(sample, training)
    except Exception as e:
        print(f"✗ worked instance: {e}")
        return False

    if abs(result.p0 - oracle.p0) > 1e-10:
        print(f"✗ circuit p0={result.p0:.6f}, formula p0={oracle.p0:.6f}")
        return False
    print(f"✓ circuit matches formula (p0={result.p0:.6f})")
    return True

def test_dependencies():
    assert check_imports() == []

def test_package_modules():
    assert check_package() == []

def test_required_files():
    assert check_file_structure() == []

def test_simulator():
    assert check_worked_instance()

def main():
    """Run all checks"""
    print("="*50)
    print("PHASE TRANSFER WORKBENCH - VALIDATION TEST")
    print("="*50)

    failed_imports = check_imports()
    failed_modules = check_package() if not failed_imports else []
    missing_files = check_file_structure()
    simulator_ok = check_worked_instance() if not failed_imports else False

    print("\n" + "="*50)
    print("TEST SUMMARY")
    print("="*50)

    if not failed_imports and not failed_modules and not missing_files and simulator_ok:
        print("✓ ALL TESTS PASSED!")
        print("\nYou can run the quick end-to-end check with:")
        print("  python run_pipeline.py --config configs/smoke.ini")
        return 0

    print("⚠ SOME TESTS FAILED:")

    if failed_imports:
        print(f"\nFailed imports: {', '.join(failed_imports)}")
        print("Run: pip install -r requirements.txt")

    if failed_modules:
        print(f"\nBroken modules: {', '.join(failed_modules)}")

    if missing_files:
        print(f"\nMissing files: {', '.join(missing_files)}")
        print("Ensure all files are in the correct location")

    if not simulator_ok:
        print("\nCircuit simulator check failed")
        print("Run: python -m pytest tests/test_qnn.py")

    print("\nFor detailed setup instructions, see README.md")
    return 1

if __name__ == "__main__":
    sys.exit(main())
