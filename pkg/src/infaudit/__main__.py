from infaudit.cli import main

raise SystemExit(main())
